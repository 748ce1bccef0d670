#pragma once

// Instruction-accurate RV32I + ZMMUL reference simulator. One call to step()
// retires one instruction; its CommitRecord stream is the verification oracle
// for the pipeline model.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vercore/error.hpp"
#include "vercore/isa.hpp"
#include "vercore/memory.hpp"

namespace vercore {

inline constexpr std::uint32_t kDefaultResetPc = 0x2000;

struct MemTxn {
  enum class Kind : std::uint8_t { Load, Store };
  Kind kind = Kind::Load;
  std::uint32_t addr = 0;
  // The accessed value, zero-extended from `width` bytes (not bus-shifted).
  std::uint32_t data = 0;
  std::uint8_t width = 4;

  bool operator==(const MemTxn&) const = default;
};

struct CommitRecord {
  std::uint32_t pc = 0;
  isa::InstrWord instr = 0;
  std::uint8_t rd = 0;
  std::uint32_t wb_value = 0;
  bool reg_write = false;  // never true for rd == 0
  std::optional<MemTxn> mem;

  bool operator==(const CommitRecord&) const = default;
};

struct HaltCause {
  enum class Kind : std::uint8_t { Ecall, Ebreak, TohostStore, MaxSteps, MaxCycles, Error };
  Kind kind = Kind::Error;
  std::uint32_t code = 0;  // meaningful for Ecall and TohostStore
  std::uint32_t pc = 0;    // pc of the halting or faulting instruction
  std::optional<Errc> error;
  std::string message;

  bool operator==(const HaltCause&) const = default;
};

std::string_view halt_kind_name(HaltCause::Kind k);
std::string describe(const HaltCause& h);

struct ArchState {
  std::uint32_t pc = kDefaultResetPc;
  std::array<std::uint32_t, 32> regs{};
  MemoryImage mem;
  std::uint64_t retired = 0;
};

struct StepResult {
  std::optional<CommitRecord> commit;
  std::optional<HaltCause> halt;
};

/// Executes the instruction at state.pc. A halting instruction (ecall, ebreak,
/// tohost store) yields both a commit and a halt; a faulting one yields only a
/// halt of kind Error and leaves the state unchanged.
StepResult step(ArchState& state);

struct RunResult {
  std::vector<CommitRecord> trace;
  HaltCause halt;
};

RunResult run(ArchState& state, std::uint64_t max_steps);

/// reg_trace.hex lines: two hex digits of rd then eight of value, lowercase,
/// one per register-writing commit.
std::vector<std::string> export_reg_trace(const std::vector<CommitRecord>& trace);
void write_reg_trace(std::ostream& out, const std::vector<CommitRecord>& trace);

/// "pc rd value [S|L addr data width]" in lowercase hex, one line per commit.
std::string format_commit(const CommitRecord& c);
void write_commit_trace(std::ostream& out, const std::vector<CommitRecord>& trace);

}  // namespace vercore
