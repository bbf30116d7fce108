#include "pimspec/nmc.hpp"

#include "pimspec/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <ostream>

namespace pimspec {

std::string_view to_string(CmdKind kind) {
    switch (kind) {
    case CmdKind::ACT1: return "ACT1";
    case CmdKind::RD: return "RD";
    case CmdKind::WR: return "WR";
    case CmdKind::MRW: return "MRW";
    case CmdKind::PRE: return "PRE";
    }
    return "?";
}

std::string_view to_string(RankKind kind) { return kind == RankKind::Dram ? "dram" : "pim"; }

std::string_view to_string(BusOwner owner) {
    switch (owner) {
    case BusOwner::NpuDram: return "npu-dram";
    case BusOwner::NpuPim: return "npu-pim";
    case BusOwner::Copy: return "copy";
    case BusOwner::Buffer: return "buffer";
    }
    return "?";
}

TagInfo decode_tag(std::uint8_t tag) {
    if (tag > 3) throw ContractViolation(fmt::format("decode_tag: {} is not a 2-bit tag", tag));
    if (tag & 0b10) return {TagMode::Buffer, (tag & 1) != 0};
    return {tag == 1 ? TagMode::CopyWrite : TagMode::Normal, false};
}

std::uint8_t encode_tag(TagInfo info) {
    switch (info.mode) {
    case TagMode::Normal: return 0b00;
    case TagMode::CopyWrite: return 0b01;
    case TagMode::Buffer: return static_cast<std::uint8_t>(0b10 | (info.lsb ? 1 : 0));
    }
    return 0;
}

NMCCommand NMCCommand::buffer_access(CmdKind kind, std::uint16_t line) {
    if (kind != CmdKind::RD && kind != CmdKind::WR)
        throw ContractViolation("buffer access must be RD or WR");
    if (line >= GlobalBuffer::kLines)
        throw AddressError(fmt::format("buffer line {} outside [0, {})", line, GlobalBuffer::kLines));
    NMCCommand c;
    c.kind = kind;
    c.rank_target = RankKind::Pim;
    c.buf_addr = line;
    c.tag = encode_tag({TagMode::Buffer, (line >> 8) != 0});
    c.addr.bank_group = (line >> 4) & 0xF;
    c.addr.bank = line & 0xF;
    return c;
}

// ---------------------------------------------------------------------------

void GlobalBuffer::check(std::uint16_t line) {
    if (line >= kLines)
        throw AddressError(fmt::format("global buffer line {} outside [0, {})", line, kLines));
}

GlobalBuffer::Line GlobalBuffer::read(std::uint16_t line) const {
    check(line);
    return lines_[line];
}

void GlobalBuffer::write(std::uint16_t line, const Line& data) {
    check(line);
    lines_[line] = data;
}

// ---------------------------------------------------------------------------

bool BusTimeline::is_free(std::int64_t start, std::int64_t duration) const {
    if (duration <= 0) return true;
    auto next = records_.lower_bound(start);
    if (next != records_.end() && next->first < start + duration) return false;
    if (next != records_.begin()) {
        auto prev = std::prev(next);
        if (prev->second.end() > start) return false;
    }
    return true;
}

void BusTimeline::reserve(std::int64_t start, std::int64_t duration, BusOwner owner,
                          std::uint64_t bytes) {
    if (duration <= 0) throw ContractViolation("BusTimeline::reserve: duration must be > 0");
    if (!is_free(start, duration))
        throw ProtocolError("DQ", fmt::format("DQ busy in [{}, {}) for {}", start, start + duration,
                                              to_string(owner)));
    records_.emplace(start, BusRecord{start, duration, owner, bytes});
}

std::int64_t BusTimeline::earliest_free(std::int64_t from, std::int64_t duration) const {
    std::int64_t s = from;
    for (;;) {
        auto next = records_.lower_bound(s);
        if (next != records_.begin()) {
            auto prev = std::prev(next);
            if (prev->second.end() > s) {
                s = prev->second.end();
                continue;
            }
        }
        if (next != records_.end() && next->first < s + duration) {
            s = next->second.end();
            continue;
        }
        return s;
    }
}

std::vector<std::pair<std::int64_t, std::int64_t>> BusTimeline::gaps(std::int64_t from,
                                                                     std::int64_t to) const {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    std::int64_t cursor = from;
    for (const auto& [start, r] : records_) {
        if (r.end() <= cursor) continue;
        if (start >= to) break;
        if (start > cursor) out.emplace_back(cursor, start);
        cursor = std::max(cursor, r.end());
    }
    if (cursor < to) out.emplace_back(cursor, to);
    return out;
}

std::int64_t BusTimeline::busy_cycles(BusOwner owner) const {
    std::int64_t v = 0;
    for (const auto& [_, r] : records_)
        if (r.owner == owner) v += r.duration;
    return v;
}

std::uint64_t BusTimeline::bytes(BusOwner owner) const {
    std::uint64_t v = 0;
    for (const auto& [_, r] : records_)
        if (r.owner == owner) v += r.bytes;
    return v;
}

std::int64_t BusTimeline::end() const {
    std::int64_t e = 0;
    for (const auto& [_, r] : records_) e = std::max(e, r.end());
    return e;
}

std::vector<BusRecord> BusTimeline::records() const {
    std::vector<BusRecord> out;
    out.reserve(records_.size());
    for (const auto& [_, r] : records_) out.push_back(r);
    return out;
}

bool BusTimeline::has_overlap() const {
    auto recs = records();
    std::sort(recs.begin(), recs.end(),
              [](const BusRecord& a, const BusRecord& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < recs.size(); ++i)
        if (recs[i].start < recs[i - 1].end()) return true;
    return false;
}

// ---------------------------------------------------------------------------

NearMemoryController::NearMemoryController(const TimingParams& timing, std::int64_t burst_cycles)
    : t_(timing), burst_cycles_(burst_cycles) {
    if (burst_cycles < 1) throw ConfigError("burst_cycles must be >= 1");
    if (t_.t_cl <= t_.t_cwl) throw ConfigError("t_cl must exceed t_cwl for copy-write pairing");
}

const NearMemoryController::BankState* NearMemoryController::find_bank(const NMCCommand& cmd) const {
    auto it = banks_.find({static_cast<int>(cmd.rank_target), cmd.addr.rank, cmd.addr.bank_group,
                           cmd.addr.bank});
    return it == banks_.end() ? nullptr : &it->second;
}

NearMemoryController::BankState& NearMemoryController::bank(const NMCCommand& cmd) {
    return banks_[{static_cast<int>(cmd.rank_target), cmd.addr.rank, cmd.addr.bank_group,
                   cmd.addr.bank}];
}

const NearMemoryController::RankState* NearMemoryController::find_rank(const NMCCommand& cmd) const {
    auto it = ranks_.find({static_cast<int>(cmd.rank_target), cmd.addr.rank});
    return it == ranks_.end() ? nullptr : &it->second;
}

std::optional<NearMemoryController::Violation>
NearMemoryController::check(const NMCCommand& cmd, std::int64_t c) const {
    const TagInfo tag = decode_tag(cmd.tag);
    if (c < 0) throw ContractViolation("command cycle must be >= 0");

    auto fail = [](std::string p, std::string d, std::int64_t earliest) {
        return std::optional<Violation>(Violation{std::move(p), std::move(d), earliest});
    };

    if (tag.mode == TagMode::Buffer) {
        if (cmd.kind != CmdKind::RD && cmd.kind != CmdKind::WR)
            throw ContractViolation("tag 1x is only defined for RD and WR");
        if (cmd.buf_addr >= GlobalBuffer::kLines)
            throw AddressError(fmt::format("buffer address {} outside 9-bit range", cmd.buf_addr));
        if (((cmd.buf_addr >> 8) != 0) != tag.lsb)
            throw AddressError("tag LSB disagrees with buffer address MSB");
    } else if (cmd.kind != CmdKind::MRW) {
        const auto& a = cmd.addr;
        if (a.rank < 0 || a.bank_group < 0 || a.bank_group >= kBankGroups || a.bank < 0 ||
            a.bank >= kBanksPerGroup || a.row < 0 || a.column < 0 || a.column >= kBurstsPerRow)
            throw AddressError(fmt::format("address rank {} bg {} bank {} row {} col {} out of range",
                                           a.rank, a.bank_group, a.bank, a.row, a.column));
    }
    if (tag.mode == TagMode::CopyWrite && cmd.kind != CmdKind::WR)
        throw ContractViolation("tag 01 is only defined for WR");

    const int stream = static_cast<int>(cmd.rank_target);
    if (auto it = ca_busy_.find(stream); it != ca_busy_.end() &&
                                         std::binary_search(it->second.begin(), it->second.end(), c))
        return fail("C/A", fmt::format("{} C/A slot {} already used", to_string(cmd.rank_target), c),
                    c + 1);

    if (cmd.kind == CmdKind::MRW) return std::nullopt;

    std::int64_t data_start = -1;
    bool needs_dq = false;
    if (cmd.kind == CmdKind::RD) {
        data_start = c + t_.t_cl;
        needs_dq = true;
    } else if (cmd.kind == CmdKind::WR) {
        data_start = c + t_.t_cwl;
        needs_dq = tag.mode != TagMode::CopyWrite;
    }

    if (tag.mode != TagMode::Buffer) {
        const BankState* b = find_bank(cmd);
        const RankState* r = find_rank(cmd);
        const bool open = b && b->open_row.has_value();
        switch (cmd.kind) {
        case CmdKind::ACT1: {
            if (open)
                throw ProtocolError("tRAS", "ACT1 to a bank with an open row (PRE first)");
            if (b && c < b->last_pre + t_.t_rp)
                return fail("tRP", "ACT1 before tRP after PRE", b->last_pre + t_.t_rp);
            if (b && c < b->last_act + t_.t_rc)
                return fail("tRC", "ACT1 before tRC after previous ACT1", b->last_act + t_.t_rc);
            if (r) {
                for (auto a : r->acts)
                    if (std::llabs(a - c) < t_.t_rrd)
                        return fail("tRRD", fmt::format("ACT1 within tRRD of ACT1 at {}", a),
                                    a + t_.t_rrd);
                std::vector<std::int64_t> w;
                for (auto a : r->acts)
                    if (std::llabs(a - c) < t_.t_faw) w.push_back(a);
                w.push_back(c);
                std::sort(w.begin(), w.end());
                for (std::size_t i = 4; i < w.size(); ++i)
                    if (w[i] - w[i - 4] < t_.t_faw)
                        return fail("tFAW", "more than four ACT1 inside tFAW",
                                    std::max(c + 1, w[i - 4] + t_.t_faw));
            }
            break;
        }
        case CmdKind::RD:
        case CmdKind::WR: {
            if (!open || *b->open_row != cmd.addr.row)
                throw ProtocolError("tRCD", fmt::format("{} to row {} which is not open",
                                                         to_string(cmd.kind), cmd.addr.row));
            if (c < b->last_act + t_.t_rcd)
                return fail("tRCD", "column command before tRCD", b->last_act + t_.t_rcd);
            if (r) {
                std::int64_t last = r->last_col[static_cast<std::size_t>(cmd.addr.bank_group)];
                if (std::llabs(last - c) < t_.t_ccd)
                    return fail("tCCD", "column commands to one bank group closer than tCCD",
                                last + t_.t_ccd);
            }
            if (tag.mode == TagMode::CopyWrite) {
                auto it = copy_reads_.find(data_start);
                if (it == copy_reads_.end())
                    throw ProtocolError("tCL-tCWL",
                                        "copy-write WR not aligned t_CL - t_CWL after a copy RD");
            }
            break;
        }
        case CmdKind::PRE:
            if (!open) throw ProtocolError("tRP", "PRE to a bank with no open row");
            if (c < b->last_act + t_.t_ras)
                return fail("tRAS", "PRE before tRAS after ACT1", b->last_act + t_.t_ras);
            if (c < b->last_wr_data_end + t_.t_wr)
                return fail("tWR", "PRE before write recovery", b->last_wr_data_end + t_.t_wr);
            break;
        case CmdKind::MRW: break;
        }
    }

    if (needs_dq && !dq_.is_free(data_start, burst_cycles_)) {
        const auto free_at = dq_.earliest_free(data_start, burst_cycles_);
        return fail("DQ", fmt::format("DQ busy at {}", data_start), c + (free_at - data_start));
    }
    return std::nullopt;
}

ScheduledCommand NearMemoryController::commit(const NMCCommand& cmd, std::int64_t c, BusOwner owner) {
    const TagInfo tag = decode_tag(cmd.tag);
    ScheduledCommand sc{cmd, c, -1, -1, owner};

    auto& ca = ca_busy_[static_cast<int>(cmd.rank_target)];
    ca.insert(std::upper_bound(ca.begin(), ca.end(), c), c);

    if (cmd.kind == CmdKind::RD || cmd.kind == CmdKind::WR) {
        sc.data_start = c + (cmd.kind == CmdKind::RD ? t_.t_cl : t_.t_cwl);
        sc.data_end = sc.data_start + burst_cycles_;
        if (tag.mode == TagMode::CopyWrite) {
            copy_reads_.erase(sc.data_start);
        } else {
            dq_.reserve(sc.data_start, burst_cycles_, owner, kBurstBytes);
            if (owner == BusOwner::Copy && cmd.kind == CmdKind::RD)
                copy_reads_.emplace(sc.data_start, c);
        }
    }

    if (tag.mode != TagMode::Buffer && cmd.kind != CmdKind::MRW) {
        auto& b = bank(cmd);
        auto& r = ranks_[{static_cast<int>(cmd.rank_target), cmd.addr.rank}];
        switch (cmd.kind) {
        case CmdKind::ACT1:
            b.open_row = cmd.addr.row;
            b.last_act = c;
            r.acts.insert(std::upper_bound(r.acts.begin(), r.acts.end(), c), c);
            break;
        case CmdKind::RD:
        case CmdKind::WR:
            r.last_col[static_cast<std::size_t>(cmd.addr.bank_group)] =
                std::max(r.last_col[static_cast<std::size_t>(cmd.addr.bank_group)], c);
            if (cmd.kind == CmdKind::WR) b.last_wr_data_end = std::max(b.last_wr_data_end, sc.data_end);
            break;
        case CmdKind::PRE:
            b.open_row.reset();
            b.last_pre = c;
            break;
        case CmdKind::MRW: break;
        }
    }

    trace_.push_back(sc);
    last_cycle_ = std::max(last_cycle_, std::max(c, sc.data_end));
    return sc;
}

ScheduledCommand NearMemoryController::issue_at(const NMCCommand& cmd, std::int64_t cycle,
                                                BusOwner owner) {
    if (auto v = check(cmd, cycle)) throw ProtocolError(v->parameter, v->detail);
    return commit(cmd, cycle, owner);
}

ScheduledCommand NearMemoryController::schedule(const NMCCommand& cmd, std::int64_t not_before,
                                                BusOwner owner) {
    std::int64_t c = std::max<std::int64_t>(0, not_before);
    while (auto v = check(cmd, c)) {
        const std::int64_t next = std::max(c + 1, v->earliest);
        if (v->parameter == "DQ") stalls_[owner] += next - c;
        c = next;
    }
    return commit(cmd, c, owner);
}

namespace {

struct BurstSlot {
    std::int32_t bg;
    std::int32_t bank;
    std::int64_t row;
    std::int64_t col;
};

BurstSlot burst_slot(std::int64_t i, std::int64_t start_row) {
    constexpr std::int64_t banks = NearMemoryController::kBankGroups * NearMemoryController::kBanksPerGroup;
    BurstSlot s;
    s.bg = static_cast<std::int32_t>(i % NearMemoryController::kBankGroups);
    s.bank = static_cast<std::int32_t>((i / NearMemoryController::kBankGroups) %
                                       NearMemoryController::kBanksPerGroup);
    s.col = (i / banks) % NearMemoryController::kBurstsPerRow;
    s.row = start_row + i / (banks * NearMemoryController::kBurstsPerRow);
    return s;
}

NMCCommand bank_cmd(CmdKind kind, RankKind target, std::int32_t rank, const BurstSlot& s,
                    std::uint8_t tag = 0) {
    NMCCommand c;
    c.kind = kind;
    c.tag = tag;
    c.rank_target = target;
    c.addr = {rank, s.bg, s.bank, s.row, s.col};
    return c;
}

} // namespace

std::int64_t NearMemoryController::open_row(RankKind kind, std::int32_t rank, std::int32_t bg,
                                            std::int32_t bk, std::int64_t row,
                                            std::int64_t not_before, BusOwner owner) {
    BurstSlot s{bg, bk, row, 0};
    NMCCommand act = bank_cmd(CmdKind::ACT1, kind, rank, s);
    const BankState* b = find_bank(act);
    if (b && b->open_row == row) return std::max(not_before, b->last_act + t_.t_rcd);
    std::int64_t t = not_before;
    if (b && b->open_row.has_value()) {
        NMCCommand pre = bank_cmd(CmdKind::PRE, kind, rank, {bg, bk, *b->open_row, 0});
        t = schedule(pre, t, owner).issue + 1;
    }
    return schedule(act, t, owner).issue + t_.t_rcd;
}

std::int64_t NearMemoryController::read_stream(RankKind kind, std::int32_t rank,
                                               std::int64_t start_row, std::uint64_t bytes,
                                               std::int64_t not_before, BusOwner owner) {
    const auto bursts = static_cast<std::int64_t>((bytes + kBurstBytes - 1) / kBurstBytes);
    constexpr std::int64_t banks = kBankGroups * kBanksPerGroup;
    std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> ready;
    for (std::int64_t i = 0; i < std::min(bursts, banks); ++i) {
        auto s = burst_slot(i, start_row);
        ready[{s.bg, s.bank}] = open_row(kind, rank, s.bg, s.bank, s.row, not_before, owner);
    }
    std::int64_t cursor = not_before;
    std::int64_t end = not_before;
    for (std::int64_t i = 0; i < bursts; ++i) {
        auto s = burst_slot(i, start_row);
        auto r = open_row(kind, rank, s.bg, s.bank, s.row, cursor, owner);
        auto sc = schedule(bank_cmd(CmdKind::RD, kind, rank, s), std::max(cursor, r), owner);
        cursor = sc.issue + 1;
        end = std::max(end, sc.data_end);
    }
    return end;
}

std::vector<ScheduledCommand> NearMemoryController::copy_write(const CopyEndpoint& src,
                                                               const CopyEndpoint& dst,
                                                               std::uint64_t bytes,
                                                               std::int64_t not_before) {
    if (src.kind == dst.kind)
        throw ContractViolation("copy_write: source and destination must be on different rank groups");
    const std::size_t first = trace_.size();
    if (bytes == 0) return {};

    const auto bursts = static_cast<std::int64_t>((bytes + kBurstBytes - 1) / kBurstBytes);
    const std::int64_t gap = t_.copy_write_gap();
    constexpr std::int64_t banks = kBankGroups * kBanksPerGroup;

    for (std::int64_t i = 0; i < std::min(bursts, banks); ++i) {
        auto s = burst_slot(i, src.start_row);
        auto d = burst_slot(i, dst.start_row);
        open_row(src.kind, src.rank, s.bg, s.bank, s.row, not_before, BusOwner::Copy);
        open_row(dst.kind, dst.rank, d.bg, d.bank, d.row, not_before, BusOwner::Copy);
    }

    std::int64_t cursor = not_before;
    for (std::int64_t i = 0; i < bursts; ++i) {
        auto s = burst_slot(i, src.start_row);
        auto d = burst_slot(i, dst.start_row);
        const auto rs = open_row(src.kind, src.rank, s.bg, s.bank, s.row, cursor, BusOwner::Copy);
        const auto rd_ready = open_row(dst.kind, dst.rank, d.bg, d.bank, d.row, cursor, BusOwner::Copy);
        NMCCommand rd = bank_cmd(CmdKind::RD, src.kind, src.rank, s);
        NMCCommand wr = bank_cmd(CmdKind::WR, dst.kind, dst.rank, d, encode_tag({TagMode::CopyWrite}));

        std::int64_t c = std::max({cursor, rs, rd_ready - gap});
        for (;;) {
            if (auto v = check(rd, c)) {
                const std::int64_t next = std::max(c + 1, v->earliest);
                if (v->parameter == "DQ") stalls_[BusOwner::Copy] += next - c;
                c = next;
                continue;
            }
            // The WR check needs the pending read registered; probe without it.
            NMCCommand probe = wr;
            probe.tag = 0;
            auto v = check(probe, c + gap);
            if (v && v->parameter != "DQ") {
                c = std::max(c + 1, v->earliest - gap);
                continue;
            }
            break;
        }
        commit(rd, c, BusOwner::Copy);
        issue_at(wr, c + gap, BusOwner::Copy);
        cursor = c + 1;
    }
    return {trace_.begin() + static_cast<std::ptrdiff_t>(first), trace_.end()};
}

GlobalBuffer::Line NearMemoryController::buffer_read(std::uint16_t line, std::int64_t not_before) {
    schedule(NMCCommand::buffer_access(CmdKind::RD, line), not_before, BusOwner::Buffer);
    return buffer_.read(line);
}

void NearMemoryController::buffer_write(std::uint16_t line, const GlobalBuffer::Line& data,
                                        std::int64_t not_before) {
    schedule(NMCCommand::buffer_access(CmdKind::WR, line), not_before, BusOwner::Buffer);
    buffer_.write(line, data);
}

void NearMemoryController::dump_trace(std::ostream& os) const {
    auto sorted = trace_;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ScheduledCommand& a, const ScheduledCommand& b) { return a.issue < b.issue; });
    for (const auto& sc : sorted) {
        const auto& c = sc.cmd;
        const TagInfo tag = decode_tag(c.tag);
        std::string where;
        if (tag.mode == TagMode::Buffer)
            where = fmt::format("buf=0x{:03x}", c.buf_addr);
        else if (c.kind == CmdKind::MRW)
            where = "-";
        else
            where = fmt::format("{}.{}.{}.{}", c.addr.bank_group, c.addr.bank, c.addr.row, c.addr.column);
        os << fmt::format("{} {} {:02b} {}{} {}\n", sc.issue, to_string(c.kind), c.tag,
                          to_string(c.rank_target), c.addr.rank, where);
    }
}

ContentionReport NearMemoryController::contention_report(std::int64_t total_cycles) const {
    if (total_cycles <= 0) throw ContractViolation("contention_report: total_cycles must be > 0");
    ContentionReport r;
    r.total_cycles = total_cycles;
    for (auto o : kAllBusOwners) {
        r.occupancy[o] = static_cast<double>(dq_.busy_cycles(o)) / static_cast<double>(total_cycles);
        auto it = stalls_.find(o);
        r.stall_cycles[o] = it == stalls_.end() ? 0 : it->second;
        r.total_stall_cycles += r.stall_cycles[o];
    }
    r.overlap = dq_.has_overlap();
    return r;
}

// ---------------------------------------------------------------------------

BusTimeline build_iteration_timeline(const std::vector<OpBusSegment>& segments,
                                     std::int64_t& total_cycles) {
    BusTimeline tl;
    std::int64_t cursor = 0;
    for (const auto& s : segments) {
        if (s.fetch_cycles < 0 || s.buffer_cycles < 0)
            throw ContractViolation("build_iteration_timeline: negative cycles");
        const std::int64_t bus = s.fetch_cycles + s.buffer_cycles;
        const std::int64_t span = std::max(s.span_cycles, bus);
        if (s.fetch_cycles > 0) tl.reserve(cursor, s.fetch_cycles, s.fetch_owner);
        if (s.buffer_cycles > 0) tl.reserve(cursor + s.fetch_cycles, s.buffer_cycles, BusOwner::Buffer);
        cursor += span;
    }
    total_cycles = cursor;
    return tl;
}

std::uint64_t fill_idle_with_copy(BusTimeline& timeline, std::int64_t total_cycles,
                                  std::uint64_t bytes, double copy_bytes_per_cycle) {
    if (!(copy_bytes_per_cycle > 0)) throw ContractViolation("fill_idle_with_copy: rate must be > 0");
    std::uint64_t placed = 0;
    for (auto [from, to] : timeline.gaps(0, total_cycles)) {
        if (placed >= bytes) break;
        const double cap = static_cast<double>(to - from) * copy_bytes_per_cycle;
        const auto take = std::min<std::uint64_t>(bytes - placed, static_cast<std::uint64_t>(cap));
        if (take == 0) continue;
        auto dur = static_cast<std::int64_t>(std::ceil(static_cast<double>(take) / copy_bytes_per_cycle));
        dur = std::min(dur, to - from);
        timeline.reserve(from, dur, BusOwner::Copy, take);
        placed += take;
    }
    return placed;
}

} // namespace pimspec
