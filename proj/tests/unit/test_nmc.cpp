#include "pimspec/error.hpp"
#include "pimspec/nmc.hpp"

#include <algorithm>
#include <gtest/gtest.h>
#include <random>
#include <sstream>

using namespace pimspec;

namespace {

NMCCommand cmd(CmdKind kind, RankKind target, std::int32_t bg, std::int32_t bank, std::int64_t row,
               std::int64_t col = 0) {
    NMCCommand c;
    c.kind = kind;
    c.rank_target = target;
    c.addr = {0, bg, bank, row, col};
    return c;
}

std::string violated(NearMemoryController& ctl, const NMCCommand& c, std::int64_t cycle) {
    try {
        ctl.issue_at(c, cycle, BusOwner::NpuDram);
    } catch (const ProtocolError& e) {
        return e.parameter();
    }
    return "";
}

// Pairwise scan of the bus records, independent of the timeline's own check.
bool overlaps(const BusTimeline& tl) {
    auto r = tl.records();
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = i + 1; j < r.size(); ++j)
            if (r[i].start < r[j].end() && r[j].start < r[i].end()) return true;
    return false;
}

} // namespace

TEST(Nmc, TagRoundTrip) {
    for (std::uint8_t t = 0; t < 4; ++t) EXPECT_EQ(encode_tag(decode_tag(t)), t);
    EXPECT_EQ(decode_tag(0).mode, TagMode::Normal);
    EXPECT_EQ(decode_tag(1).mode, TagMode::CopyWrite);
    EXPECT_EQ(decode_tag(2).mode, TagMode::Buffer);
    EXPECT_TRUE(decode_tag(3).lsb);
    EXPECT_THROW(decode_tag(4), ContractViolation);
}

TEST(Nmc, BufferAddressCarriesTagLsb) {
    auto lo = NMCCommand::buffer_access(CmdKind::RD, 0x0ff);
    auto hi = NMCCommand::buffer_access(CmdKind::WR, 0x100);
    EXPECT_EQ(lo.tag, 0b10);
    EXPECT_EQ(hi.tag, 0b11);
    EXPECT_EQ(hi.buf_addr, 0x100);
    EXPECT_THROW(NMCCommand::buffer_access(CmdKind::RD, 512), AddressError);
    EXPECT_THROW(NMCCommand::buffer_access(CmdKind::ACT1, 1), ContractViolation);
}

TEST(Nmc, ActThenReadDataTiming) {
    TimingParams t;
    NearMemoryController ctl(t);
    ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 5), 10, BusOwner::NpuDram);
    auto rd = ctl.issue_at(cmd(CmdKind::RD, RankKind::Dram, 0, 0, 5), 10 + t.t_rcd, BusOwner::NpuDram);
    EXPECT_EQ(rd.data_start, 10 + t.t_rcd + t.t_cl);
    EXPECT_EQ(rd.data_end, rd.data_start + 1);
}

TEST(Nmc, TimingViolationsNameTheParameter) {
    TimingParams t;
    {
        NearMemoryController ctl(t);
        ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 1), 0, BusOwner::NpuDram);
        EXPECT_EQ(violated(ctl, cmd(CmdKind::RD, RankKind::Dram, 0, 0, 1), t.t_rcd - 1), "tRCD");
        ctl.issue_at(cmd(CmdKind::RD, RankKind::Dram, 0, 0, 1), t.t_rcd, BusOwner::NpuDram);
        EXPECT_EQ(violated(ctl, cmd(CmdKind::RD, RankKind::Dram, 0, 0, 1, 1), t.t_rcd + t.t_ccd - 1), "tCCD");
        EXPECT_EQ(violated(ctl, cmd(CmdKind::PRE, RankKind::Dram, 0, 0, 1), t.t_ras - 1), "tRAS");
        EXPECT_EQ(violated(ctl, cmd(CmdKind::RD, RankKind::Dram, 0, 0, 2), 100), "tRCD"); // row not open
        EXPECT_EQ(violated(ctl, cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 2), 100), "tRAS"); // bank open
        EXPECT_EQ(violated(ctl, cmd(CmdKind::ACT1, RankKind::Dram, 1, 0, 2), 1), "tRRD");
        ctl.issue_at(cmd(CmdKind::PRE, RankKind::Dram, 0, 0, 1), t.t_ras, BusOwner::NpuDram);
        EXPECT_EQ(violated(ctl, cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 3), t.t_ras + t.t_rp - 1), "tRP");
        EXPECT_EQ(violated(ctl, cmd(CmdKind::PRE, RankKind::Dram, 0, 0, 3), 200), "tRP");
    }
    {
        TimingParams tf = t;
        tf.t_faw = 20;
        NearMemoryController ctl(tf);
        for (int i = 0; i < 4; ++i)
            ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Dram, i, 0, 0), i * t.t_rrd, BusOwner::NpuDram);
        // Fifth activate after tRRD but inside tFAW of the first.
        EXPECT_EQ(violated(ctl, cmd(CmdKind::ACT1, RankKind::Dram, 0, 1, 0), 4 * t.t_rrd), "tFAW");
        EXPECT_EQ(violated(ctl, cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 7), t.t_rc - 1), "tRAS");
    }
    {
        TimingParams tc = t;
        tc.t_ras = 10;
        tc.t_rp = 5;
        NearMemoryController ctl(tc);
        ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 0), 0, BusOwner::NpuDram);
        ctl.issue_at(cmd(CmdKind::PRE, RankKind::Dram, 0, 0, 0), tc.t_ras, BusOwner::NpuDram);
        EXPECT_EQ(violated(ctl, cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 1), tc.t_rc - 1), "tRC");
    }
    {
        NearMemoryController ctl(t);
        ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 0), 0, BusOwner::NpuDram);
        ctl.issue_at(cmd(CmdKind::WR, RankKind::Dram, 0, 0, 0), t.t_rcd, BusOwner::NpuDram);
        const std::int64_t wr_end = t.t_rcd + t.t_cwl + 1;
        EXPECT_EQ(violated(ctl, cmd(CmdKind::PRE, RankKind::Dram, 0, 0, 0), wr_end + t.t_wr - 1), "tWR");
        EXPECT_EQ(violated(ctl, cmd(CmdKind::MRW, RankKind::Dram, 0, 0, 0), 0), "C/A");
    }
}

TEST(Nmc, ReadsSharingDqBeatCollide) {
    TimingParams t;
    NearMemoryController ctl(t);
    ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 0), 0, BusOwner::NpuDram);
    ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Pim, 0, 0, 0), 0, BusOwner::NpuPim);
    ctl.issue_at(cmd(CmdKind::RD, RankKind::Dram, 0, 0, 0), 20, BusOwner::NpuDram);
    EXPECT_EQ(violated(ctl, cmd(CmdKind::RD, RankKind::Pim, 0, 0, 0), 20), "DQ");
}

TEST(Nmc, SeparateCommandStreamsRunInParallel) {
    TimingParams t;
    NearMemoryController ctl(t);
    ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Pim, 0, 0, 0), 0, BusOwner::NpuPim);
    EXPECT_NO_THROW(ctl.issue_at(cmd(CmdKind::RD, RankKind::Pim, 0, 0, 0), 20, BusOwner::NpuPim));
    EXPECT_NO_THROW(ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 0), 20, BusOwner::NpuDram));
}

TEST(Nmc, ScheduleFindsEarliestLegalCycle) {
    TimingParams t;
    NearMemoryController ctl(t);
    ctl.schedule(cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 0), 0, BusOwner::NpuDram);
    auto rd = ctl.schedule(cmd(CmdKind::RD, RankKind::Dram, 0, 0, 0), 0, BusOwner::NpuDram);
    EXPECT_EQ(rd.issue, t.t_rcd);
    auto rd2 = ctl.schedule(cmd(CmdKind::RD, RankKind::Dram, 0, 0, 0, 1), 0, BusOwner::NpuDram);
    EXPECT_EQ(rd2.issue, t.t_rcd + t.t_ccd);
}

TEST(Nmc, CopyWriteGapIsClMinusCwl) {
    TimingParams t;
    ASSERT_EQ(t.copy_write_gap(), 2);
    NearMemoryController ctl(t);
    auto tr = ctl.copy_write({RankKind::Dram, 0, 0}, {RankKind::Pim, 0, 0}, 4096);
    std::vector<std::int64_t> rd, wr;
    for (const auto& sc : tr) {
        if (sc.cmd.kind == CmdKind::RD) rd.push_back(sc.issue);
        if (sc.cmd.kind == CmdKind::WR) {
            wr.push_back(sc.issue);
            EXPECT_EQ(sc.cmd.tag, 0b01);
            EXPECT_EQ(sc.cmd.rank_target, RankKind::Pim);
        }
    }
    ASSERT_EQ(rd.size(), 64u);
    ASSERT_EQ(wr.size(), 64u);
    for (std::size_t i = 0; i < rd.size(); ++i) EXPECT_EQ(wr[i] - rd[i], 2);
    EXPECT_EQ(ctl.dq().bytes(BusOwner::Copy), 4096u);
    EXPECT_FALSE(overlaps(ctl.dq()));
}

TEST(Nmc, CopyWriteNeedsDifferentRankGroups) {
    NearMemoryController ctl(TimingParams{});
    EXPECT_THROW(ctl.copy_write({RankKind::Dram, 0, 0}, {RankKind::Dram, 1, 0}, 64), ContractViolation);
}

TEST(Nmc, UnpairedCopyWriteRejected) {
    TimingParams t;
    NearMemoryController ctl(t);
    ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Pim, 0, 0, 0), 0, BusOwner::Copy);
    auto wr = cmd(CmdKind::WR, RankKind::Pim, 0, 0, 0);
    wr.tag = 0b01;
    EXPECT_EQ(violated(ctl, wr, 40), "tCL-tCWL");
}

TEST(Nmc, CopyInterleavesWithNpuReads) {
    NearMemoryController ctl(TimingParams{});
    ctl.read_stream(RankKind::Dram, 0, 0, 16 * 1024, 0, BusOwner::NpuDram);
    ctl.copy_write({RankKind::Dram, 1, 0}, {RankKind::Pim, 0, 0}, 8 * 1024, 0);
    EXPECT_GT(ctl.dq().bytes(BusOwner::NpuDram), 0u);
    EXPECT_EQ(ctl.dq().bytes(BusOwner::Copy), 8u * 1024);
    EXPECT_FALSE(overlaps(ctl.dq()));
    EXPECT_FALSE(ctl.dq().has_overlap());
}

TEST(Nmc, GlobalBufferRoundTrip) {
    NearMemoryController ctl(TimingParams{});
    GlobalBuffer::Line a{1, 2, 3, 4, 5, 6, 7, 8};
    ctl.buffer_write(0, a, 0);
    EXPECT_EQ(ctl.buffer_read(0, 0), a);

    for (std::uint16_t i = 0; i < 512; ++i) {
        GlobalBuffer::Line l{};
        for (std::size_t b = 0; b < l.size(); ++b) l[b] = static_cast<std::uint8_t>(i * 8 + b);
        ctl.buffer_write(i, l, 0);
    }
    for (std::uint16_t i = 0; i < 512; ++i) {
        auto l = ctl.buffer_read(i, 0);
        for (std::size_t b = 0; b < l.size(); ++b) EXPECT_EQ(l[b], static_cast<std::uint8_t>(i * 8 + b));
    }
    EXPECT_EQ(ctl.dq().busy_cycles(BusOwner::Buffer), 2 + 1024);
    GlobalBuffer g;
    EXPECT_THROW(g.read(512), AddressError);
}

TEST(Nmc, BufferAccessSerializesBehindDramBeat) {
    TimingParams t;
    NearMemoryController ctl(t);
    ctl.issue_at(cmd(CmdKind::ACT1, RankKind::Dram, 0, 0, 0), 0, BusOwner::NpuDram);
    auto rd = ctl.issue_at(cmd(CmdKind::RD, RankKind::Dram, 0, 0, 0), t.t_rcd, BusOwner::NpuDram);
    // A buffer read issued so its beat would land on the DRAM beat.
    ctl.buffer_read(3, rd.data_start - t.t_cl);
    const auto& last = ctl.trace().back();
    EXPECT_GE(last.data_start, rd.data_end);
    EXPECT_FALSE(overlaps(ctl.dq()));
    auto rep = ctl.contention_report(ctl.dq().end());
    EXPECT_GT(rep.stall_cycles[BusOwner::Buffer], 0);
}

TEST(Nmc, ContentionReport) {
    NearMemoryController idle(TimingParams{});
    auto r0 = idle.contention_report(100);
    for (auto o : kAllBusOwners) EXPECT_EQ(r0.occupancy[o], 0.0);

    NearMemoryController ctl(TimingParams{});
    ctl.copy_write({RankKind::Pim, 0, 0}, {RankKind::Dram, 0, 0}, 2048);
    const std::int64_t total = ctl.dq().end();
    auto r = ctl.contention_report(total);
    EXPECT_DOUBLE_EQ(r.occupancy[BusOwner::Copy], 32.0 / static_cast<double>(total));
    EXPECT_FALSE(r.overlap);
}

TEST(Nmc, IterationTimelineWithCopyFill) {
    std::vector<OpBusSegment> segs{{100, 10, 300, BusOwner::NpuDram}, {50, 20, 90, BusOwner::NpuDram}};
    std::int64_t total = 0;
    auto tl = build_iteration_timeline(segs, total);
    EXPECT_EQ(total, 390);
    EXPECT_EQ(tl.busy_cycles(BusOwner::NpuDram), 150);
    EXPECT_EQ(tl.busy_cycles(BusOwner::Buffer), 30);
    const auto placed = fill_idle_with_copy(tl, total, 1'000'000, 64.0);
    EXPECT_EQ(placed, static_cast<std::uint64_t>((390 - 180) * 64));
    EXPECT_FALSE(overlaps(tl));
    auto r = tl.records();
    std::int64_t busy = 0;
    for (const auto& rec : r) busy += rec.duration;
    EXPECT_EQ(busy, total);
}

TEST(Nmc, RandomizedIterationsNeverOverlap) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> kb(1, 24), line(0, 511), row(0, 64);
    for (int it = 0; it < 100; ++it) {
        NearMemoryController ctl(TimingParams{});
        ctl.read_stream(RankKind::Dram, 0, row(rng), static_cast<std::uint64_t>(kb(rng)) * 1024, 0, BusOwner::NpuDram);
        for (int b = 0; b < 8; ++b) ctl.buffer_write(static_cast<std::uint16_t>(line(rng)), {}, 0);
        ctl.copy_write({RankKind::Dram, 1, row(rng)}, {RankKind::Pim, 0, row(rng)},
                       static_cast<std::uint64_t>(kb(rng)) * 512, 0);
        EXPECT_FALSE(overlaps(ctl.dq())) << it;
    }
}

TEST(Nmc, TraceFormat) {
    NearMemoryController ctl(TimingParams{});
    ctl.buffer_write(0x1ab, {}, 0);
    ctl.copy_write({RankKind::Dram, 0, 0}, {RankKind::Pim, 2, 0}, 64);
    std::ostringstream os;
    ctl.dump_trace(os);
    const auto s = os.str();
    EXPECT_NE(s.find("WR 11 pim0 buf=0x1ab"), std::string::npos) << s;
    EXPECT_NE(s.find("WR 01 pim2 0.0.0.0"), std::string::npos) << s;
    EXPECT_NE(s.find("RD 00 dram0 0.0.0.0"), std::string::npos) << s;
}

TEST(Nmc, RejectsCwlNotBelowCl) {
    TimingParams t;
    t.t_cwl = t.t_cl;
    EXPECT_THROW(NearMemoryController{t}, ConfigError);
}
