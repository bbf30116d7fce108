#pragma once

#include "pimspec/system.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pimspec {

enum class CmdKind { ACT1, RD, WR, MRW, PRE };
enum class RankKind { Dram, Pim };

std::string_view to_string(CmdKind kind);
std::string_view to_string(RankKind kind);

// 2-bit command tag: 00 normal, 01 copy-write, 1x PIM global buffer access
// where the tag LSB is the buffer address MSB.
enum class TagMode { Normal, CopyWrite, Buffer };

struct TagInfo {
    TagMode mode = TagMode::Normal;
    bool lsb = false; // only meaningful for Buffer

    friend bool operator==(const TagInfo&, const TagInfo&) = default;
};

TagInfo decode_tag(std::uint8_t tag);
std::uint8_t encode_tag(TagInfo info);

struct BankAddress {
    std::int32_t rank = 0;
    std::int32_t bank_group = 0;
    std::int32_t bank = 0;
    std::int64_t row = 0;
    std::int64_t column = 0;
};

struct NMCCommand {
    CmdKind kind = CmdKind::RD;
    std::uint8_t tag = 0;
    RankKind rank_target = RankKind::Dram;
    BankAddress addr;
    std::uint16_t buf_addr = 0; // 9 bits: tag LSB + 8-bit bank/bank-group field

    static NMCCommand buffer_access(CmdKind kind, std::uint16_t line);
};

/// Dedicated 4 KB register array behind the tag-1x commands.
class GlobalBuffer {
public:
    static constexpr std::size_t kLineBytes = 8;
    static constexpr std::size_t kLines = 512;
    static constexpr std::size_t kCapacity = kLineBytes * kLines;
    using Line = std::array<std::uint8_t, kLineBytes>;

    Line read(std::uint16_t line) const;
    void write(std::uint16_t line, const Line& data);

private:
    static void check(std::uint16_t line);
    std::array<Line, kLines> lines_{};
};

enum class BusOwner { NpuDram, NpuPim, Copy, Buffer };
inline constexpr std::array<BusOwner, 4> kAllBusOwners = {BusOwner::NpuDram, BusOwner::NpuPim,
                                                         BusOwner::Copy, BusOwner::Buffer};
std::string_view to_string(BusOwner owner);

struct BusRecord {
    std::int64_t start = 0;
    std::int64_t duration = 0;
    BusOwner owner = BusOwner::NpuDram;
    std::uint64_t bytes = 0;

    std::int64_t end() const { return start + duration; }
};

/// Occupancy of the shared DQ lines. Records never overlap; `reserve`
/// refuses anything that would.
class BusTimeline {
public:
    void reserve(std::int64_t start, std::int64_t duration, BusOwner owner, std::uint64_t bytes = 0);
    bool is_free(std::int64_t start, std::int64_t duration) const;
    std::int64_t earliest_free(std::int64_t from, std::int64_t duration) const;

    /// Idle intervals inside [from, to).
    std::vector<std::pair<std::int64_t, std::int64_t>> gaps(std::int64_t from, std::int64_t to) const;

    std::int64_t busy_cycles(BusOwner owner) const;
    std::uint64_t bytes(BusOwner owner) const;
    std::int64_t end() const;
    std::vector<BusRecord> records() const;

    /// Pairwise scan over the sorted records; independent of `reserve`.
    bool has_overlap() const;

private:
    std::map<std::int64_t, BusRecord> records_;
};

struct ScheduledCommand {
    NMCCommand cmd;
    std::int64_t issue = 0;
    std::int64_t data_start = -1; // -1: no data phase
    std::int64_t data_end = -1;
    BusOwner owner = BusOwner::NpuDram;
};

struct CopyEndpoint {
    RankKind kind = RankKind::Dram;
    std::int32_t rank = 0;
    std::int64_t start_row = 0;
};

struct ContentionReport {
    std::int64_t total_cycles = 0;
    std::map<BusOwner, double> occupancy; // fraction of total cycles
    std::map<BusOwner, std::int64_t> stall_cycles;
    std::int64_t total_stall_cycles = 0;
    bool overlap = false;
};

/// Command-level model of the near-data memory controller: separate C/A
/// streams for the DRAM and PIM rank groups, one shared DQ timeline, bank
/// timing validation, copy-write pairing and the PIM global buffer.
class NearMemoryController {
public:
    static constexpr std::int64_t kBurstBytes = 64;
    static constexpr std::int32_t kBankGroups = 4;
    static constexpr std::int32_t kBanksPerGroup = 4;
    static constexpr std::int64_t kBurstsPerRow = 32; // 2 KB page

    explicit NearMemoryController(const TimingParams& timing, std::int64_t burst_cycles = 1);

    /// Issue exactly at `cycle`; throws ProtocolError naming the violated
    /// parameter if any constraint fails.
    ScheduledCommand issue_at(const NMCCommand& cmd, std::int64_t cycle, BusOwner owner);

    /// Issue at the earliest legal cycle >= `not_before`.
    ScheduledCommand schedule(const NMCCommand& cmd, std::int64_t not_before, BusOwner owner);

    /// Stream `bytes` from a rank in 64-byte bursts spread across banks
    /// (opening rows as needed). Returns the cycle the last data beat ends.
    std::int64_t read_stream(RankKind kind, std::int32_t rank, std::int64_t start_row,
                             std::uint64_t bytes, std::int64_t not_before, BusOwner owner);

    /// DRAM<->PIM in-module copy: each RD(tag 00) is followed exactly
    /// t_CL - t_CWL cycles later by WR(tag 01) on the other rank group, so the
    /// read beat feeds the write. Returns the commands it issued.
    std::vector<ScheduledCommand> copy_write(const CopyEndpoint& src, const CopyEndpoint& dst,
                                             std::uint64_t bytes, std::int64_t not_before = 0);

    /// Tag-1x line access: bypasses bank timing, occupies one DQ beat.
    GlobalBuffer::Line buffer_read(std::uint16_t line, std::int64_t not_before);
    void buffer_write(std::uint16_t line, const GlobalBuffer::Line& data, std::int64_t not_before);

    const BusTimeline& dq() const { return dq_; }
    const std::vector<ScheduledCommand>& trace() const { return trace_; }
    std::int64_t now() const { return last_cycle_; }

    /// `<cycle> <kind> <tag> <rank> <addr|bufaddr>`, one command per line.
    void dump_trace(std::ostream& os) const;

    ContentionReport contention_report(std::int64_t total_cycles) const;

private:
    struct BankState {
        std::optional<std::int64_t> open_row;
        std::int64_t last_act = kNever;
        std::int64_t last_pre = kNever;
        std::int64_t last_wr_data_end = kNever;
    };
    struct RankState {
        std::vector<std::int64_t> acts; // issue cycles of ACT1, ascending
        std::array<std::int64_t, kBankGroups> last_col = {kNever, kNever, kNever, kNever};
    };
    struct Violation {
        std::string parameter;
        std::string detail;
        std::int64_t earliest = 0;
    };
    static constexpr std::int64_t kNever = -(1ll << 40);

    std::optional<Violation> check(const NMCCommand& cmd, std::int64_t cycle) const;
    ScheduledCommand commit(const NMCCommand& cmd, std::int64_t cycle, BusOwner owner);
    BankState& bank(const NMCCommand& cmd);
    const BankState* find_bank(const NMCCommand& cmd) const;
    const RankState* find_rank(const NMCCommand& cmd) const;
    std::int64_t open_row(RankKind kind, std::int32_t rank, std::int32_t bg, std::int32_t bk,
                          std::int64_t row, std::int64_t not_before, BusOwner owner);

    using BankKey = std::tuple<int, std::int32_t, std::int32_t, std::int32_t>;
    using RankKey = std::pair<int, std::int32_t>;

    TimingParams t_;
    std::int64_t burst_cycles_;
    BusTimeline dq_;
    std::map<int, std::vector<std::int64_t>> ca_busy_; // per rank group, sorted cycles
    std::map<BankKey, BankState> banks_;
    std::map<RankKey, RankState> ranks_;
    std::map<std::int64_t, std::int64_t> copy_reads_; // data_start -> RD issue, awaiting WR
    std::map<BusOwner, std::int64_t> stalls_;
    std::vector<ScheduledCommand> trace_;
    GlobalBuffer buffer_;
    std::int64_t last_cycle_ = 0;
};

/// Per-op DQ usage of one coarse decode iteration, in CK cycles.
struct OpBusSegment {
    std::int64_t fetch_cycles = 0;  // NPU weight/KV fetch
    std::int64_t buffer_cycles = 0; // PIM inputs/outputs through the global buffer
    std::int64_t span_cycles = 0;   // wall-clock length of the op window
    BusOwner fetch_owner = BusOwner::NpuDram;
};

/// Lays the segments end to end on a fresh timeline: each op window starts
/// with its NPU fetch then its buffer traffic; the rest of the window is idle.
BusTimeline build_iteration_timeline(const std::vector<OpBusSegment>& segments,
                                     std::int64_t& total_cycles);

/// Fills idle DQ slots in [0, total_cycles) with copy-write traffic at
/// `copy_bytes_per_cycle`, up to `bytes`. Returns bytes placed.
std::uint64_t fill_idle_with_copy(BusTimeline& timeline, std::int64_t total_cycles,
                                  std::uint64_t bytes, double copy_bytes_per_cycle);

} // namespace pimspec
