#pragma once

// RV32I + ZMMUL instruction decode, immediate generation, encode and
// disassembly. Everything here is a pure function.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace vercore::isa {

using InstrWord = std::uint32_t;

enum class Mnemonic : std::uint8_t {
  Lui, Auipc, Jal, Jalr,
  Beq, Bne, Blt, Bge, Bltu, Bgeu,
  Lb, Lh, Lw, Lbu, Lhu,
  Sb, Sh, Sw,
  Addi, Slti, Sltiu, Xori, Ori, Andi, Slli, Srli, Srai,
  Add, Sub, Sll, Slt, Sltu, Xor, Srl, Sra, Or, And,
  Fence, FenceI, Ecall, Ebreak,
  Mul, Mulh, Mulhsu, Mulhu,
};

inline constexpr int kMnemonicCount = static_cast<int>(Mnemonic::Mulhu) + 1;

enum class Format : std::uint8_t { R, I, S, B, U, J };

struct Control {
  bool reg_write = false;  // gated by rd != 0
  bool mem_read = false;
  bool mem_write = false;
  bool is_branch = false;
  bool is_jump = false;
  bool mul_en = false;
  bool uses_rs1 = false;
  bool uses_rs2 = false;

  bool operator==(const Control&) const = default;
};

struct DecodedInstr {
  InstrWord word = 0;
  Mnemonic mnemonic = Mnemonic::Addi;
  Format fmt = Format::I;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;
  // For slli/srli/srai this is the shift amount, not the raw imm[11:0] field.
  std::int32_t imm = 0;
  std::uint8_t funct3 = 0;
  std::uint8_t funct7 = 0;
  Control control;

  bool operator==(const DecodedInstr&) const = default;
};

/// Throws Error{IllegalInstruction} for anything outside RV32I + ZMMUL,
/// including every compressed-style word and all CSR/privileged encodings
/// other than ecall/ebreak.
DecodedInstr decode(InstrWord word);

/// Non-throwing variant for callers that treat illegal words as data.
std::optional<DecodedInstr> try_decode(InstrWord word);

/// Sign-extended immediate of `word` interpreted in format `fmt`. R has no
/// immediate and yields 0.
std::int32_t gen_immediate(InstrWord word, Format fmt);

/// Operands that the format does not use must be zero; immediates must be in
/// range for the format (U-type takes the final value with imm[11:0] == 0).
InstrWord encode(Mnemonic m, unsigned rd, unsigned rs1, unsigned rs2, std::int32_t imm);

std::string disassemble(const DecodedInstr& d);

std::string_view mnemonic_name(Mnemonic m);
std::optional<Mnemonic> parse_mnemonic(std::string_view name);
Format format_of(Mnemonic m);

bool is_load(Mnemonic m);
bool is_store(Mnemonic m);
bool is_branch(Mnemonic m);
bool is_mul(Mnemonic m);
bool is_shift_imm(Mnemonic m);

/// Access width in bytes for loads/stores, 0 otherwise.
unsigned access_width(Mnemonic m);

/// All mnemonics in declaration order.
std::span<const Mnemonic> all_mnemonics();

}  // namespace vercore::isa
