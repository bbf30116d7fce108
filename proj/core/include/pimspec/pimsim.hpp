#pragma once

#include "pimspec/system.hpp"
#include "pimspec/workload.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace pimspec {

/// Register and datapath resources of one matrix processing unit.
struct MPUResources {
    std::int64_t n_simd_alus = 4;
    std::int64_t lanes = 32; // INT8 multipliers per ALU
    std::int64_t crf_entries = 32;
    std::int64_t crf_bits = 32;
    std::int64_t grf_entries = 16;
    std::int64_t grf_bits = 4 * 256;
    std::int64_t srf_entries = 16;
    std::int64_t srf_bits = 4 * 8;
    std::int64_t arf_entries = 8;
    std::int64_t arf_bits = 4 * 1024; // INT32 accumulators

    static MPUResources from(const PIMConfig& pim);

    /// INT32 accumulators each ALU holds; bounds a resident column tile.
    std::int64_t accumulators_per_alu() const { return arf_entries * arf_bits / n_simd_alus / 32; }
    /// INT8 input elements per token the GRFs can stage.
    std::int64_t staged_inputs_per_token() const { return grf_entries * grf_bits / n_simd_alus / 8; }
};

/// How one GEMM slice is tiled onto an MPU's registers.
struct GemmTiling {
    std::int64_t col_tiles = 0; // output column tiles resident in the ARFs
    std::int64_t k_chunks = 0;  // input chunks staged through the GRFs per tile
    std::int64_t passes = 0;    // weight-stream passes: ceil(l_spec / n_simd_alus)
    std::int64_t input_reload_bytes = 0; // inputs broadcast for this slice
};

/// Tiles `cols` x `k` for `l_spec` tokens. Tile sizes never exceed the
/// register capacities; double buffering is assumed stall-free.
GemmTiling plan_gemm_tiles(std::int64_t cols, std::int64_t k, std::int64_t l_spec,
                           const MPUResources& mpu);

struct UnitAssignment {
    std::int64_t rank = 0;
    std::int64_t die = 0;
    std::int64_t mpu = 0;
    std::int64_t col_begin = 0; // [col_begin, col_end)
    std::int64_t col_end = 0;

    std::int64_t cols() const { return col_end - col_begin; }
};

struct ColumnMapping {
    std::int64_t n = 0;
    std::int64_t k = 0;
    std::vector<UnitAssignment> units;

    std::int64_t max_cols() const;
    std::int64_t min_cols() const;
};

/// Even column-wise split of an eligible op over every MPU; remainder
/// columns go one per unit to the leading units.
ColumnMapping map_gemm_columnwise(const OpDescriptor& op, const PIMConfig& pim);

enum class CommScheme { Broadcast, AllReduce };

struct CommCost {
    std::uint64_t bytes_moved = 0;
    CommScheme scheme = CommScheme::Broadcast;
};

/// Broadcast moves the payload once (all-bank mode, every CS asserted);
/// all-reduce without on-die accumulators moves it once per compute unit.
CommCost comm_cost(std::uint64_t bytes, CommScheme scheme, const PIMConfig& pim);

/// Time for one MPU to produce `cols` outputs over a reduction of `k` for
/// `l_spec` tokens: one 256-bit bank beat per t_CCD feeds every ALU.
double mpu_gemm_time(std::int64_t cols, std::int64_t k, std::int64_t l_spec, const PIMConfig& pim,
                     const TimingParams& timing);

/// Slowest unit of a column mapping, i.e. the op's PIM latency at MPU granularity.
double mapped_gemm_time(const ColumnMapping& mapping, std::int64_t l_spec, const PIMConfig& pim,
                        const TimingParams& timing);

enum class PimMode { Normal, AllBank, AllBankPim };

std::string_view to_string(PimMode mode);

/// Cost of one mode-register write between adjacent modes. Throws
/// ProtocolError for no-op transitions and for skipping all-bank mode.
double mode_switch(PimMode from, PimMode to, const PIMConfig& pim);

/// Mode state of the PIM ranks; accumulates switch overhead.
class PimModeTracker {
public:
    explicit PimModeTracker(const PIMConfig& pim) : pim_(pim) {}

    void switch_to(PimMode to);
    /// all-bank -> all-bank-PIM -> all-bank around one kernel. Enters
    /// all-bank mode first if the ranks are in normal mode.
    void launch_kernel();

    PimMode mode() const { return mode_; }
    std::int64_t switches() const { return switches_; }
    double overhead_s() const { return overhead_s_; }

private:
    PIMConfig pim_;
    PimMode mode_ = PimMode::Normal;
    std::int64_t switches_ = 0;
    double overhead_s_ = 0.0;
};

} // namespace pimspec
