#pragma once

// Cycle-accurate model of the 5-stage in-order VerCore pipeline.
//
// Each call to step_cycle() evaluates one clock cycle. Combinational outputs
// are computed in this order, which is what makes the same-cycle bypass paths
// well defined:
//
//   WB  -> regfile write data, commit
//   MEM -> data-cache access, load extract, MEM forward value
//   EX  -> operand forwarding (EX/MEM, then MEM/WB), ALU / mul result
//   ID  -> decode, regfile read with WB bypass, branch/jump operand
//          forwarding (EX, MEM, WB), branch resolution, hazard decision
//   IF  -> instruction fetch
//
// after which every pipeline register, the PC, the register file and the
// multiplier advance together at the clock edge.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "vercore/golden.hpp"
#include "vercore/isa.hpp"
#include "vercore/memory.hpp"
#include "vercore/mul.hpp"

namespace vercore::pipeline {

enum class AluOp : std::uint8_t { Add, Sub, Sll, Slt, Sltu, Xor, Srl, Sra, Or, And, PassB };
enum class WbSel : std::uint8_t { Alu, Mem, PcPlus4 };
enum class SysOp : std::uint8_t { None, Ecall, Ebreak };

/// Trace sideband that rides along a slot so WB can emit a CommitRecord. It is
/// live for every architecturally executed instruction, including branches,
/// which are bubbles as far as the datapath is concerned.
struct RetireTag {
  bool live = false;
  std::uint32_t pc = 0;
  isa::InstrWord instr = 0;
  std::uint8_t rd = 0;
  SysOp sys = SysOp::None;
  std::optional<Errc> fault;
  std::uint32_t fault_detail = 0;  // offending address or target

  bool operator==(const RetireTag&) const = default;
};

struct IfIdReg {
  std::uint32_t pc_id = 0;
  isa::InstrWord instr_id = 0;
  std::uint32_t pc_plus4_id = 0;
  bool valid_id = false;
  bool fetch_fault = false;  // word was read from uninitialized memory

  bool operator==(const IfIdReg&) const = default;
};

struct IdExCtrl {
  bool reg_write = false;
  bool mem_read = false;
  bool mem_write = false;
  bool mem_to_reg = false;
  AluOp alu_op = AluOp::Add;
  bool alu_src = false;  // operand B from the immediate
  bool use_pc = false;   // operand A from pc_ex
  bool use_imm = false;
  WbSel wb_sel = WbSel::Alu;
  bool mul_en = false;
  mul::MulOp mul_op = mul::MulOp::Mul;

  bool operator==(const IdExCtrl&) const = default;
};

struct IdExReg {
  std::uint32_t pc_ex = 0;
  std::uint32_t pc_plus4_ex = 0;
  std::uint32_t rs1_val = 0;
  std::uint32_t rs2_val = 0;
  std::uint32_t imm = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;
  std::uint8_t rd = 0;
  std::uint8_t funct3 = 0;
  std::uint8_t funct7 = 0;
  IdExCtrl ctrl;
  bool valid_ex = false;
  RetireTag tag;

  bool operator==(const IdExReg&) const = default;
};

struct ExMemCtrl {
  bool reg_write = false;
  bool mem_read = false;
  bool mem_write = false;
  bool mem_to_reg = false;
  WbSel wb_sel = WbSel::Alu;

  bool operator==(const ExMemCtrl&) const = default;
};

struct ExMemReg {
  std::uint32_t alu_result = 0;
  std::uint32_t store_data = 0;
  std::uint32_t pc_plus4_ex = 0;
  std::uint8_t rd = 0;
  std::uint8_t funct3 = 0;
  ExMemCtrl ctrl;
  bool valid_mem = false;
  RetireTag tag;

  // Set when the access was performed during a global stall; the held slot
  // replays the stashed result instead of touching the cache again.
  bool mem_done = false;
  std::uint32_t mem_result = 0;
  std::optional<MemTxn> txn;
  std::optional<std::uint32_t> tohost_value;

  bool operator==(const ExMemReg&) const = default;
};

struct MemWbReg {
  std::uint32_t wb_data = 0;
  std::uint8_t rd = 0;
  bool reg_write = false;  // never true for rd == 0
  bool valid_wb = false;
  RetireTag tag;
  std::optional<MemTxn> txn;
  std::optional<std::uint32_t> tohost_value;
  bool wb_done = false;  // committed during a global stall

  bool operator==(const MemWbReg&) const = default;
};

struct CacheBus {
  std::uint32_t ic_va = 0;
  bool ic_valid = false;
  std::uint32_t ic_d_in = 0;
  std::uint32_t dc_va = 0;
  bool dc_valid = false;
  std::uint8_t dc_byte_en = 0;  // nonzero only for stores
  std::uint32_t dc_d_out = 0;
  std::uint32_t dc_d_in = 0;

  bool operator==(const CacheBus&) const = default;
};

struct HazardDecision {
  bool stall_pc = false;
  bool stall_ifid = false;
  bool flush_ifid = false;
  bool bubble_idex = false;
  bool global_stall = false;

  bool operator==(const HazardDecision&) const = default;
};

/// Test-only fault injection used to reproduce pipeline bugs on purpose.
struct FaultInjection {
  bool disable_ifid_flush = false;
  bool disable_store_data_forwarding = false;
};

struct CoreConfig {
  std::uint32_t reset_pc = kDefaultResetPc;
  unsigned mul_latency = mul::kDefaultLatency;
  FaultInjection faults;
};

struct CoreState {
  std::uint32_t pc_f = kDefaultResetPc;
  IfIdReg ifid;
  IdExReg idex;
  ExMemReg exmem;
  MemWbReg memwb;
  std::array<std::uint32_t, 32> regfile{};
  mul::MulUnitState mul;
  std::uint64_t cycle = 0;
  bool reset_n = false;
  bool fetch_halted = false;  // a halting or faulting instruction left ID
  bool store_halt = false;    // a tohost store has been performed

  bool operator==(const CoreState&) const = default;
};

/// Core held in reset at the configured reset vector.
CoreState make_core(const CoreConfig& cfg);

/// Value the EX or MEM stage offers to the ID-stage bypass network.
struct ForwardSource {
  bool writes = false;
  std::uint8_t rd = 0;
  std::uint32_t value = 0;
};

/// Priority: reset, then taken target, then hold on stall, else pc + 4.
std::uint32_t next_pc(bool reset, std::uint32_t reset_pc, std::uint32_t pc_f, bool branch_taken,
                      std::uint32_t target, bool stall);

/// EX-stage bypass, EX/MEM before MEM/WB. x0 is never forwarded.
std::uint32_t forward_ex(unsigned rs, std::uint32_t rs_val, const ExMemReg& exmem,
                         const MemWbReg& memwb);

/// ID-stage bypass for branch/jump/mul operands: EX, then MEM, then WB, then
/// the register file value.
std::uint32_t forward_id(unsigned rs, std::uint32_t regfile_val, const ForwardSource& ex,
                         const ForwardSource& mem, const MemWbReg& wb);

/// `id_instr` is null when the IF/ID slot is empty. `branch_taken` is the
/// ID-stage resolution for this cycle.
HazardDecision hazard_detect(const isa::DecodedInstr* id_instr, const IdExReg& idex,
                             const mul::MulUnitState& mul, bool branch_taken);

struct StoreLanes {
  std::uint8_t byte_en = 0;
  std::uint32_t data = 0;
  bool operator==(const StoreLanes&) const = default;
};

/// Data-cache byte enables and lane-shifted data for sb/sh/sw. Throws
/// Error{MisalignedAccess}; funct3 outside {0,1,2} is IllegalInstruction.
StoreLanes store_align(unsigned funct3, std::uint32_t addr, std::uint32_t rs2_val);

/// Selects and extends the addressed byte/half/word of an aligned bus word.
std::uint32_t load_extract(unsigned funct3, std::uint32_t addr, std::uint32_t mem_word);

/// Everything observable about one cycle, keyed to the documented signal set.
struct CycleSignals {
  std::uint64_t cycle = 0;
  bool reset_n = false;
  std::uint32_t pc_f = 0;
  CacheBus bus;
  std::uint8_t wb_rd = 0;
  bool wb_reg_write = false;
  std::uint32_t wb_data = 0;
  bool branch_taken = false;
  std::uint32_t branch_target = 0;
  HazardDecision hazard;
  bool valid_id = false;
  bool valid_ex = false;
  bool valid_mem = false;
  bool valid_wb = false;
  std::uint32_t pc_id = 0;
  std::uint32_t instr_id = 0;
  std::uint32_t pc_ex = 0;
  std::uint32_t pc_mem = 0;
  std::uint32_t pc_wb = 0;
  bool mul_busy = false;
  bool mul_out_valid = false;
  bool mul_out_ready = false;

  bool operator==(const CycleSignals&) const = default;
};

struct CycleEvents {
  std::optional<CommitRecord> commit;
  std::optional<HaltCause> halt;
  CacheBus bus;
  CycleSignals signals;
};

CycleEvents step_cycle(CoreState& core, MemoryImage& mem, const CoreConfig& cfg);

struct CoreStats {
  std::uint64_t load_use_stalls = 0;
  std::uint64_t global_stall_cycles = 0;
  std::uint64_t flushes = 0;
};

struct CoreRunResult {
  std::vector<CommitRecord> commits;
  std::vector<std::uint64_t> commit_cycles;  // cycle in which commits[i] retired
  std::uint64_t cycles = 0;                  // cycles after reset release
  HaltCause halt;
  std::vector<CycleSignals> signal_log;      // includes the reset cycle 0
  CoreStats stats;
};

/// Holds reset for one cycle, releases it and runs until a halt or until
/// `max_cycles` post-reset cycles have elapsed.
CoreRunResult run_core(CoreState& core, MemoryImage& mem, const CoreConfig& cfg,
                       std::uint64_t max_cycles, bool record_signals = false);

}  // namespace vercore::pipeline
