#pragma once

// Small in-process assembler for building test and benchmark programs on top
// of isa::encode. Branch and jump targets may name labels defined later.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vercore/isa.hpp"
#include "vercore/memory.hpp"

namespace vercore {

class ProgramBuilder {
 public:
  explicit ProgramBuilder(std::uint32_t base = 0x2000) : base_(base) {}

  std::uint32_t base() const { return base_; }
  std::uint32_t pc() const { return base_ + 4 * static_cast<std::uint32_t>(words_.size()); }
  std::size_t size() const { return words_.size(); }

  /// Binds `name` to the current pc. Rebinding a label throws.
  ProgramBuilder& label(const std::string& name);

  ProgramBuilder& emit(isa::Mnemonic m, unsigned rd, unsigned rs1, unsigned rs2, std::int32_t imm);
  ProgramBuilder& word(std::uint32_t raw);

  ProgramBuilder& r(isa::Mnemonic m, unsigned rd, unsigned rs1, unsigned rs2);
  ProgramBuilder& i(isa::Mnemonic m, unsigned rd, unsigned rs1, std::int32_t imm);
  ProgramBuilder& load(isa::Mnemonic m, unsigned rd, unsigned base, std::int32_t offset);
  ProgramBuilder& store(isa::Mnemonic m, unsigned src, unsigned base, std::int32_t offset);
  ProgramBuilder& branch(isa::Mnemonic m, unsigned rs1, unsigned rs2, const std::string& target);
  ProgramBuilder& branch(isa::Mnemonic m, unsigned rs1, unsigned rs2, std::int32_t offset);
  ProgramBuilder& jal(unsigned rd, const std::string& target);
  ProgramBuilder& jal(unsigned rd, std::int32_t offset);
  ProgramBuilder& jalr(unsigned rd, unsigned rs1, std::int32_t imm);
  ProgramBuilder& lui(unsigned rd, std::uint32_t value);  // value must have low 12 bits clear
  ProgramBuilder& auipc(unsigned rd, std::uint32_t value);

  /// Two-instruction constant load (lui + addi), or one addi when it fits.
  ProgramBuilder& li(unsigned rd, std::uint32_t value);
  ProgramBuilder& nop();
  ProgramBuilder& ecall();
  ProgramBuilder& ebreak();

  /// Resolves label references. Throws Error{OutOfRangeImmediate} for targets
  /// out of reach and Error{InvalidOperandForFormat} for unknown labels.
  std::vector<std::uint32_t> words() const;
  MemoryImage image() const;

  std::uint32_t address_of(const std::string& name) const;

 private:
  struct Fixup {
    std::size_t index;
    isa::Mnemonic m;
    unsigned rd, rs1, rs2;
    std::string target;
  };

  std::uint32_t base_;
  std::vector<std::uint32_t> words_;
  std::vector<Fixup> fixups_;
  std::map<std::string, std::uint32_t> labels_;
};

/// Places `words` little-endian from `base`.
MemoryImage image_from_words(const std::vector<std::uint32_t>& words, std::uint32_t base);

}  // namespace vercore
