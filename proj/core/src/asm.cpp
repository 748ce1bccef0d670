#include "vercore/asm.hpp"

#include "vercore/error.hpp"

namespace vercore {

using isa::Mnemonic;

ProgramBuilder& ProgramBuilder::label(const std::string& name) {
  if (!labels_.emplace(name, pc()).second)
    throw Error(Errc::InvalidOperandForFormat, "label defined twice: " + name);
  return *this;
}

ProgramBuilder& ProgramBuilder::emit(Mnemonic m, unsigned rd, unsigned rs1, unsigned rs2,
                                     std::int32_t imm) {
  words_.push_back(isa::encode(m, rd, rs1, rs2, imm));
  return *this;
}

ProgramBuilder& ProgramBuilder::word(std::uint32_t raw) {
  words_.push_back(raw);
  return *this;
}

ProgramBuilder& ProgramBuilder::r(Mnemonic m, unsigned rd, unsigned rs1, unsigned rs2) {
  return emit(m, rd, rs1, rs2, 0);
}

ProgramBuilder& ProgramBuilder::i(Mnemonic m, unsigned rd, unsigned rs1, std::int32_t imm) {
  return emit(m, rd, rs1, 0, imm);
}

ProgramBuilder& ProgramBuilder::load(Mnemonic m, unsigned rd, unsigned base, std::int32_t offset) {
  return emit(m, rd, base, 0, offset);
}

ProgramBuilder& ProgramBuilder::store(Mnemonic m, unsigned src, unsigned base,
                                      std::int32_t offset) {
  return emit(m, 0, base, src, offset);
}

ProgramBuilder& ProgramBuilder::branch(Mnemonic m, unsigned rs1, unsigned rs2,
                                       const std::string& target) {
  fixups_.push_back({words_.size(), m, 0, rs1, rs2, target});
  words_.push_back(0);
  return *this;
}

ProgramBuilder& ProgramBuilder::branch(Mnemonic m, unsigned rs1, unsigned rs2,
                                       std::int32_t offset) {
  return emit(m, 0, rs1, rs2, offset);
}

ProgramBuilder& ProgramBuilder::jal(unsigned rd, const std::string& target) {
  fixups_.push_back({words_.size(), Mnemonic::Jal, rd, 0, 0, target});
  words_.push_back(0);
  return *this;
}

ProgramBuilder& ProgramBuilder::jal(unsigned rd, std::int32_t offset) {
  return emit(Mnemonic::Jal, rd, 0, 0, offset);
}

ProgramBuilder& ProgramBuilder::jalr(unsigned rd, unsigned rs1, std::int32_t imm) {
  return emit(Mnemonic::Jalr, rd, rs1, 0, imm);
}

ProgramBuilder& ProgramBuilder::lui(unsigned rd, std::uint32_t value) {
  return emit(Mnemonic::Lui, rd, 0, 0, static_cast<std::int32_t>(value));
}

ProgramBuilder& ProgramBuilder::auipc(unsigned rd, std::uint32_t value) {
  return emit(Mnemonic::Auipc, rd, 0, 0, static_cast<std::int32_t>(value));
}

ProgramBuilder& ProgramBuilder::li(unsigned rd, std::uint32_t value) {
  const auto sv = static_cast<std::int32_t>(value);
  if (sv >= -2048 && sv <= 2047) return i(Mnemonic::Addi, rd, 0, sv);
  const std::uint32_t lo = value & 0xfff;
  const std::uint32_t hi = (value + (lo >= 0x800 ? 0x1000 : 0)) & 0xfffff000u;
  lui(rd, hi);
  if (lo != 0) i(Mnemonic::Addi, rd, rd, static_cast<std::int32_t>(lo << 20) >> 20);
  return *this;
}

ProgramBuilder& ProgramBuilder::nop() { return i(Mnemonic::Addi, 0, 0, 0); }
ProgramBuilder& ProgramBuilder::ecall() { return emit(Mnemonic::Ecall, 0, 0, 0, 0); }
ProgramBuilder& ProgramBuilder::ebreak() { return emit(Mnemonic::Ebreak, 0, 0, 0, 0); }

std::uint32_t ProgramBuilder::address_of(const std::string& name) const {
  const auto it = labels_.find(name);
  if (it == labels_.end()) throw Error(Errc::InvalidOperandForFormat, "unknown label: " + name);
  return it->second;
}

std::vector<std::uint32_t> ProgramBuilder::words() const {
  std::vector<std::uint32_t> out = words_;
  for (const Fixup& f : fixups_) {
    const std::uint32_t at = base_ + 4 * static_cast<std::uint32_t>(f.index);
    const auto offset = static_cast<std::int32_t>(address_of(f.target) - at);
    out[f.index] = isa::encode(f.m, f.rd, f.rs1, f.rs2, offset);
  }
  return out;
}

MemoryImage ProgramBuilder::image() const { return image_from_words(words(), base_); }

MemoryImage image_from_words(const std::vector<std::uint32_t>& words, std::uint32_t base) {
  MemoryImage img;
  for (std::size_t k = 0; k < words.size(); ++k)
    img.write_bytes(base + 4 * static_cast<std::uint32_t>(k), words[k], 0b1111);
  return img;
}

}  // namespace vercore
