#include <gtest/gtest.h>

#include "corpus.hpp"
#include "vercore/asm.hpp"
#include "vercore/error.hpp"
#include "vercore/pipeline.hpp"

using namespace vercore;
using namespace vercore::pipeline;
using M = isa::Mnemonic;

namespace {

CoreRunResult run_program(const ProgramBuilder& b, CoreConfig cfg = {}, bool signals = false,
                          std::uint64_t max_cycles = 100000) {
  cfg.reset_pc = b.base();
  CoreState core = make_core(cfg);
  MemoryImage mem = b.image();
  return run_core(core, mem, cfg, max_cycles, signals);
}

ExMemReg exmem_writing(unsigned rd, std::uint32_t v) {
  ExMemReg r;
  r.valid_mem = true;
  r.ctrl.reg_write = true;
  r.rd = static_cast<std::uint8_t>(rd);
  r.alu_result = v;
  return r;
}

MemWbReg memwb_writing(unsigned rd, std::uint32_t v) {
  MemWbReg r;
  r.valid_wb = true;
  r.reg_write = true;
  r.rd = static_cast<std::uint8_t>(rd);
  r.wb_data = v;
  return r;
}

IdExReg load_in_ex(unsigned rd) {
  IdExReg r;
  r.valid_ex = true;
  r.rd = static_cast<std::uint8_t>(rd);
  r.ctrl.mem_read = true;
  r.ctrl.reg_write = rd != 0;
  return r;
}

}  // namespace

TEST(NextPc, Priority) {
  EXPECT_EQ(next_pc(true, 0x2000, 0x3000, true, 0x2020, true), 0x2000u);
  EXPECT_EQ(next_pc(false, 0x2000, 0x2008, true, 0x2020, false), 0x2020u);
  EXPECT_EQ(next_pc(false, 0x2000, 0x2008, false, 0, true), 0x2008u);
  EXPECT_EQ(next_pc(false, 0x2000, 0x2008, false, 0, false), 0x200cu);
}

TEST(ForwardEx, PriorityAndX0) {
  EXPECT_EQ(forward_ex(5, 1, exmem_writing(5, 2), memwb_writing(5, 3)), 2u);
  EXPECT_EQ(forward_ex(5, 1, exmem_writing(6, 2), memwb_writing(5, 3)), 3u);
  EXPECT_EQ(forward_ex(0, 0, exmem_writing(0, 2), memwb_writing(0, 3)), 0u);
  EXPECT_EQ(forward_ex(7, 9, exmem_writing(6, 2), memwb_writing(5, 3)), 9u);
  ExMemReg bubble = exmem_writing(5, 2);
  bubble.valid_mem = false;
  EXPECT_EQ(forward_ex(5, 1, bubble, MemWbReg{}), 1u);
}

TEST(ForwardId, Priority) {
  const ForwardSource ex{true, 5, 10}, mem{true, 5, 20}, none{};
  EXPECT_EQ(forward_id(5, 1, ex, mem, memwb_writing(5, 30)), 10u);
  EXPECT_EQ(forward_id(5, 1, none, mem, memwb_writing(5, 30)), 20u);
  EXPECT_EQ(forward_id(5, 1, none, none, memwb_writing(5, 30)), 30u);
  EXPECT_EQ(forward_id(5, 1, none, none, MemWbReg{}), 1u);
  EXPECT_EQ(forward_id(0, 0, ForwardSource{true, 0, 10}, none, MemWbReg{}), 0u);
}

TEST(HazardDetect, LoadUse) {
  const auto use = isa::decode(isa::encode(M::Add, 1, 5, 2, 0));
  const auto h = hazard_detect(&use, load_in_ex(5), mul::make_unit(), false);
  EXPECT_TRUE(h.stall_pc && h.stall_ifid && h.bubble_idex);
  EXPECT_FALSE(h.global_stall);
  EXPECT_FALSE(h.flush_ifid);

  const auto x0 = isa::decode(isa::encode(M::Add, 1, 0, 0, 0));
  EXPECT_EQ(hazard_detect(&x0, load_in_ex(0), mul::make_unit(), false), HazardDecision{});

  const auto other = isa::decode(isa::encode(M::Add, 1, 6, 7, 0));
  EXPECT_FALSE(hazard_detect(&other, load_in_ex(5), mul::make_unit(), false).stall_pc);
  // lui has no source registers even though its rs1 field bits could collide.
  const auto lui = isa::decode(isa::encode(M::Lui, 5, 0, 0, 0x5000));
  EXPECT_FALSE(hazard_detect(&lui, load_in_ex(5), mul::make_unit(), false).stall_pc);
}

TEST(HazardDetect, BranchAndJalrOnLoadStall) {
  const auto beq = isa::decode(isa::encode(M::Beq, 0, 1, 5, 8));
  EXPECT_TRUE(hazard_detect(&beq, load_in_ex(5), mul::make_unit(), false).bubble_idex);
  const auto jalr = isa::decode(isa::encode(M::Jalr, 1, 5, 0, 0));
  EXPECT_TRUE(hazard_detect(&jalr, load_in_ex(5), mul::make_unit(), false).bubble_idex);
}

TEST(HazardDetect, MulPendingGlobalStall) {
  IdExReg mul_ex;
  mul_ex.valid_ex = true;
  mul_ex.ctrl.mul_en = true;
  mul::MulUnitState busy = mul::tick(mul::make_unit(4), mul::MulRequest{}, false);
  const auto h = hazard_detect(nullptr, mul_ex, busy, false);
  EXPECT_TRUE(h.global_stall && h.stall_pc && h.stall_ifid);
  EXPECT_FALSE(h.bubble_idex);
}

TEST(HazardDetect, TakenBranchFlushes) {
  const auto jal = isa::decode(isa::encode(M::Jal, 1, 0, 0, 16));
  EXPECT_TRUE(hazard_detect(&jal, IdExReg{}, mul::make_unit(), true).flush_ifid);
  EXPECT_FALSE(hazard_detect(&jal, IdExReg{}, mul::make_unit(), false).flush_ifid);
}

TEST(StoreAlign, Examples) {
  EXPECT_EQ(store_align(0, 0x1002, 0xab), (StoreLanes{0b0100, 0x00ab0000}));
  EXPECT_EQ(store_align(1, 0x1002, 0xbeef), (StoreLanes{0b1100, 0xbeef0000}));
  EXPECT_EQ(store_align(2, 0x1004, 0x12345678), (StoreLanes{0b1111, 0x12345678}));
  EXPECT_THROW(store_align(1, 0x1001, 0), Error);
  EXPECT_THROW(store_align(2, 0x1002, 0), Error);
}

TEST(LoadExtract, Examples) {
  EXPECT_EQ(load_extract(4, 0x1003, 0x80ff0000), 0x80u);
  EXPECT_EQ(load_extract(1, 0x1002, 0x80001234), 0xffff8000u);
  EXPECT_EQ(load_extract(2, 0x1000, 0xdeadbeef), 0xdeadbeefu);
  EXPECT_THROW(load_extract(2, 0x1001, 0), Error);
}

TEST(Pipeline, ResetHoldsAndFirstFetchFollows) {
  ProgramBuilder b;
  b.ecall();
  const auto r = run_program(b, {}, true);
  ASSERT_GE(r.signal_log.size(), 2u);
  const CycleSignals& reset = r.signal_log[0];
  EXPECT_FALSE(reset.reset_n);
  EXPECT_FALSE(reset.bus.ic_valid || reset.valid_id || reset.valid_ex || reset.valid_mem || reset.valid_wb);
  EXPECT_TRUE(r.signal_log[1].bus.ic_valid);
  EXPECT_EQ(r.signal_log[1].bus.ic_va, 0x2000u);
}

TEST(Pipeline, StraightLineOneCommitPerCycleAfterFill) {
  ProgramBuilder b;
  for (int k = 0; k < 9; ++k) b.i(M::Addi, 1, 1, 1);
  b.ecall();
  const auto r = run_program(b);
  ASSERT_EQ(r.commits.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(r.commit_cycles[i], 5 + i);
  EXPECT_EQ(r.cycles, 14u);
  EXPECT_EQ(r.halt.kind, HaltCause::Kind::Ecall);
}

TEST(Pipeline, HundredInstructionsTake104Cycles) {
  ProgramBuilder b;
  for (int k = 0; k < 99; ++k) b.i(M::Addi, 1, 1, 1);
  b.ecall();
  const auto r = run_program(b);
  EXPECT_EQ(r.commits.size(), 100u);
  EXPECT_EQ(r.cycles, 104u);
}

TEST(Pipeline, TakenJalInvalidatesShadowSlot) {
  const auto p = testkit::jump_shadow_program();
  CoreConfig cfg;
  CoreState core = make_core(cfg);
  MemoryImage mem = p.image;
  const auto r = run_core(core, mem, cfg, 1000, true);
  // Find the cycle where the jal at 0x2008 resolves in ID.
  std::size_t k = 0;
  while (k < r.signal_log.size() && !(r.signal_log[k].valid_id && r.signal_log[k].pc_id == 0x2008)) ++k;
  ASSERT_LT(k + 1, r.signal_log.size());
  EXPECT_TRUE(r.signal_log[k].branch_taken);
  EXPECT_EQ(r.signal_log[k].branch_target, 0x2020u);
  EXPECT_EQ(r.signal_log[k].bus.ic_va, 0x200cu);
  EXPECT_EQ(r.signal_log[k + 1].bus.ic_va, 0x2020u);
  EXPECT_FALSE(r.signal_log[k + 1].valid_id);  // 0x200c was flushed
  for (const auto& c : r.commits) EXPECT_TRUE(c.pc != 0x200c && c.pc != 0x2010);
}

TEST(Pipeline, TakenJumpsCostOneBubbleEach) {
  for (int n : {1, 4, 16}) {
    ProgramBuilder jumps, base;
    for (int k = 0; k < n; ++k) {
      jumps.jal(0, 4);
      base.nop();
    }
    jumps.ecall();
    base.ecall();
    const auto rj = run_program(jumps), rb = run_program(base);
    ASSERT_EQ(rj.commits.size(), rb.commits.size());
    EXPECT_EQ(rj.cycles, rb.cycles + static_cast<std::uint64_t>(n)) << n;
    EXPECT_EQ(rj.stats.flushes, static_cast<std::uint64_t>(n));
  }
}

TEST(Pipeline, NotTakenBranchesCostNothing) {
  ProgramBuilder br, base;
  br.li(1, 1);
  base.li(1, 1);
  for (int k = 0; k < 8; ++k) {
    br.branch(M::Beq, 1, 0, 8);
    base.nop();
  }
  br.ecall();
  base.ecall();
  EXPECT_EQ(run_program(br).cycles, run_program(base).cycles);
}

TEST(Pipeline, LoadUseCostsExactlyOneCycle) {
  auto make = [](bool dependent, bool spaced) {
    ProgramBuilder b;
    b.lui(31, 0x10000).li(1, 5).store(M::Sw, 1, 31, 0);
    b.load(M::Lw, 2, 31, 0);
    if (spaced) b.i(M::Addi, 4, 0, 1);
    b.r(M::Add, 3, dependent ? 2 : 1, 1);
    if (!spaced) b.nop();
    b.ecall();
    return b;
  };
  const auto use = run_program(make(true, false));
  const auto indep = run_program(make(false, false));
  const auto spaced = run_program(make(true, true));
  EXPECT_EQ(use.cycles, indep.cycles + 1);
  EXPECT_EQ(spaced.cycles, indep.cycles);
  EXPECT_EQ(use.stats.load_use_stalls, 1u);
  EXPECT_EQ(spaced.stats.load_use_stalls, 0u);
  EXPECT_EQ(use.commits.back().pc, indep.commits.back().pc);
}

TEST(Pipeline, MulStallsLatencyMinusOne) {
  for (unsigned latency : {1u, 2u, 4u, 6u}) {
    ProgramBuilder with_mul, without;
    with_mul.li(1, 3).r(M::Mul, 2, 1, 1).ecall();
    without.li(1, 3).r(M::Add, 2, 1, 1).ecall();
    CoreConfig cfg;
    cfg.mul_latency = latency;
    const auto a = run_program(with_mul, cfg), b = run_program(without, cfg);
    EXPECT_EQ(a.cycles, b.cycles + latency - 1) << latency;
    EXPECT_EQ(a.stats.global_stall_cycles, latency - 1);
    EXPECT_EQ(a.commits[1].wb_value, 9u);
  }
}

TEST(Pipeline, MulScenarioHandTrace) {
  // lui/addi pairs for two operands, mul, lui/addi expected value, ecall:
  // 8 retired + 4 fill + 3 stall cycles.
  ProgramBuilder b;
  b.li(5, 0x12345678).li(6, 0x9abcdef0).r(M::Mul, 7, 5, 6).li(28, 0x242d2080).ecall();
  const auto r = run_program(b);
  ASSERT_EQ(r.commits.size(), 8u);
  EXPECT_EQ(r.cycles, 15u);
  EXPECT_EQ(r.commits[4].wb_value, 0x242d2080u);
  EXPECT_EQ(r.commits[4].rd, 7);
}

TEST(Pipeline, NoDuplicateCommitsAndNoRepeatMemoryDuringStall) {
  ProgramBuilder b;
  b.lui(31, 0x10000).li(1, 7).store(M::Sw, 1, 31, 0).load(M::Lw, 2, 31, 0).r(M::Mul, 3, 2, 1);
  b.store(M::Sw, 3, 31, 4).r(M::Mul, 4, 3, 3).ecall();
  const auto r = run_program(b, {}, true);
  std::vector<std::uint32_t> pcs;
  for (const auto& c : r.commits) pcs.push_back(c.pc);
  for (std::size_t i = 1; i < pcs.size(); ++i) EXPECT_EQ(pcs[i], pcs[i - 1] + 4);
  bool prev_stall = false;
  for (const auto& s : r.signal_log) {
    if (s.hazard.global_stall && prev_stall) {
      EXPECT_FALSE(s.bus.dc_valid) << "cycle " << s.cycle;
      EXPECT_FALSE(s.wb_reg_write) << "cycle " << s.cycle;
    }
    prev_stall = s.hazard.global_stall;
  }
}

TEST(Pipeline, DcByteEnableOnlyForStores) {
  ProgramBuilder b;
  b.lui(31, 0x10000).li(1, 0xab).store(M::Sb, 1, 31, 2).load(M::Lbu, 2, 31, 2).ecall();
  const auto r = run_program(b, {}, true);
  int stores = 0, loads = 0;
  for (const auto& s : r.signal_log) {
    if (!s.bus.dc_valid) continue;
    if (s.bus.dc_byte_en) {
      ++stores;
      EXPECT_EQ(s.bus.dc_byte_en, 0b0100);
      EXPECT_EQ(s.bus.dc_d_out, 0x00ab0000u);
    } else {
      ++loads;
      EXPECT_EQ(s.bus.dc_d_in, 0x00ab0000u);
    }
  }
  EXPECT_EQ(stores, 1);
  EXPECT_EQ(loads, 1);
  EXPECT_EQ(r.commits[3].wb_value, 0xabu);
}

TEST(Pipeline, X0NeverWrittenOrForwarded) {
  ProgramBuilder b;
  b.i(M::Addi, 0, 0, 5).r(M::Add, 1, 0, 0).r(M::Mul, 0, 2, 2).r(M::Add, 3, 0, 0).ecall();
  const auto r = run_program(b);
  EXPECT_EQ(r.commits[1].wb_value, 0u);
  EXPECT_EQ(r.commits[3].wb_value, 0u);
  EXPECT_FALSE(r.commits[0].reg_write);
  EXPECT_FALSE(r.commits[2].reg_write);
}

TEST(Pipeline, CapReachedIsMaxCycles) {
  ProgramBuilder b;
  b.jal(0, 0);
  const auto r = run_program(b, {}, false, 50);
  EXPECT_EQ(r.halt.kind, HaltCause::Kind::MaxCycles);
  EXPECT_EQ(r.cycles, 50u);
}

TEST(Pipeline, ErrorsHaltPrecisely) {
  {
    ProgramBuilder b;
    b.i(M::Addi, 1, 0, 1).word(0xffffffff).i(M::Addi, 2, 0, 2);
    const auto r = run_program(b);
    EXPECT_EQ(r.halt.kind, HaltCause::Kind::Error);
    EXPECT_EQ(r.halt.error, Errc::IllegalInstruction);
    EXPECT_EQ(r.halt.pc, 0x2004u);
    EXPECT_EQ(r.commits.size(), 1u);
  }
  {
    ProgramBuilder b;
    b.li(1, 0x10002).load(M::Lw, 2, 1, 0).i(M::Addi, 3, 0, 1);
    const auto r = run_program(b);
    EXPECT_EQ(r.halt.error, Errc::MisalignedAccess);
    EXPECT_EQ(r.commits.size(), 2u);
  }
  {
    ProgramBuilder b;
    b.nop();
    const auto r = run_program(b);
    EXPECT_EQ(r.halt.error, Errc::FetchFromUninitializedMemory);
    EXPECT_EQ(r.halt.pc, 0x2004u);
  }
}

TEST(Pipeline, RunCoreIsDeterministic) {
  const auto p = testkit::elf_programs().front();
  CoreConfig cfg;
  cfg.reset_pc = p.entry;
  CoreState c1 = make_core(cfg), c2 = make_core(cfg);
  MemoryImage m1 = p.image, m2 = p.image;
  const auto r1 = run_core(c1, m1, cfg, 1'000'000), r2 = run_core(c2, m2, cfg, 1'000'000);
  EXPECT_EQ(r1.commits, r2.commits);
  EXPECT_EQ(r1.cycles, r2.cycles);
}
