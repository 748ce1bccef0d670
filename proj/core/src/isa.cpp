#include "vercore/isa.hpp"

#include <array>
#include <cstdio>

#include "vercore/error.hpp"

namespace vercore::isa {

namespace {

constexpr std::uint32_t kOpLui = 0x37;
constexpr std::uint32_t kOpAuipc = 0x17;
constexpr std::uint32_t kOpJal = 0x6f;
constexpr std::uint32_t kOpJalr = 0x67;
constexpr std::uint32_t kOpBranch = 0x63;
constexpr std::uint32_t kOpLoad = 0x03;
constexpr std::uint32_t kOpStore = 0x23;
constexpr std::uint32_t kOpImm = 0x13;
constexpr std::uint32_t kOpReg = 0x33;
constexpr std::uint32_t kOpMiscMem = 0x0f;
constexpr std::uint32_t kOpSystem = 0x73;

struct Encoding {
  Mnemonic m;
  std::string_view name;
  Format fmt;
  std::uint32_t opcode;
  std::uint8_t funct3;
  std::uint8_t funct7;
};

// Indexed by Mnemonic.
constexpr std::array<Encoding, kMnemonicCount> kTable{{
    {Mnemonic::Lui, "lui", Format::U, kOpLui, 0, 0},
    {Mnemonic::Auipc, "auipc", Format::U, kOpAuipc, 0, 0},
    {Mnemonic::Jal, "jal", Format::J, kOpJal, 0, 0},
    {Mnemonic::Jalr, "jalr", Format::I, kOpJalr, 0, 0},
    {Mnemonic::Beq, "beq", Format::B, kOpBranch, 0, 0},
    {Mnemonic::Bne, "bne", Format::B, kOpBranch, 1, 0},
    {Mnemonic::Blt, "blt", Format::B, kOpBranch, 4, 0},
    {Mnemonic::Bge, "bge", Format::B, kOpBranch, 5, 0},
    {Mnemonic::Bltu, "bltu", Format::B, kOpBranch, 6, 0},
    {Mnemonic::Bgeu, "bgeu", Format::B, kOpBranch, 7, 0},
    {Mnemonic::Lb, "lb", Format::I, kOpLoad, 0, 0},
    {Mnemonic::Lh, "lh", Format::I, kOpLoad, 1, 0},
    {Mnemonic::Lw, "lw", Format::I, kOpLoad, 2, 0},
    {Mnemonic::Lbu, "lbu", Format::I, kOpLoad, 4, 0},
    {Mnemonic::Lhu, "lhu", Format::I, kOpLoad, 5, 0},
    {Mnemonic::Sb, "sb", Format::S, kOpStore, 0, 0},
    {Mnemonic::Sh, "sh", Format::S, kOpStore, 1, 0},
    {Mnemonic::Sw, "sw", Format::S, kOpStore, 2, 0},
    {Mnemonic::Addi, "addi", Format::I, kOpImm, 0, 0},
    {Mnemonic::Slti, "slti", Format::I, kOpImm, 2, 0},
    {Mnemonic::Sltiu, "sltiu", Format::I, kOpImm, 3, 0},
    {Mnemonic::Xori, "xori", Format::I, kOpImm, 4, 0},
    {Mnemonic::Ori, "ori", Format::I, kOpImm, 6, 0},
    {Mnemonic::Andi, "andi", Format::I, kOpImm, 7, 0},
    {Mnemonic::Slli, "slli", Format::I, kOpImm, 1, 0x00},
    {Mnemonic::Srli, "srli", Format::I, kOpImm, 5, 0x00},
    {Mnemonic::Srai, "srai", Format::I, kOpImm, 5, 0x20},
    {Mnemonic::Add, "add", Format::R, kOpReg, 0, 0x00},
    {Mnemonic::Sub, "sub", Format::R, kOpReg, 0, 0x20},
    {Mnemonic::Sll, "sll", Format::R, kOpReg, 1, 0x00},
    {Mnemonic::Slt, "slt", Format::R, kOpReg, 2, 0x00},
    {Mnemonic::Sltu, "sltu", Format::R, kOpReg, 3, 0x00},
    {Mnemonic::Xor, "xor", Format::R, kOpReg, 4, 0x00},
    {Mnemonic::Srl, "srl", Format::R, kOpReg, 5, 0x00},
    {Mnemonic::Sra, "sra", Format::R, kOpReg, 5, 0x20},
    {Mnemonic::Or, "or", Format::R, kOpReg, 6, 0x00},
    {Mnemonic::And, "and", Format::R, kOpReg, 7, 0x00},
    {Mnemonic::Fence, "fence", Format::I, kOpMiscMem, 0, 0},
    {Mnemonic::FenceI, "fence.i", Format::I, kOpMiscMem, 1, 0},
    {Mnemonic::Ecall, "ecall", Format::I, kOpSystem, 0, 0},
    {Mnemonic::Ebreak, "ebreak", Format::I, kOpSystem, 0, 0},
    {Mnemonic::Mul, "mul", Format::R, kOpReg, 0, 0x01},
    {Mnemonic::Mulh, "mulh", Format::R, kOpReg, 1, 0x01},
    {Mnemonic::Mulhsu, "mulhsu", Format::R, kOpReg, 2, 0x01},
    {Mnemonic::Mulhu, "mulhu", Format::R, kOpReg, 3, 0x01},
}};

constexpr std::array<Mnemonic, kMnemonicCount> make_all() {
  std::array<Mnemonic, kMnemonicCount> out{};
  for (int i = 0; i < kMnemonicCount; ++i) out[i] = static_cast<Mnemonic>(i);
  return out;
}
constexpr auto kAll = make_all();

const Encoding& enc(Mnemonic m) { return kTable[static_cast<std::size_t>(m)]; }

constexpr std::uint32_t bits(std::uint32_t w, int hi, int lo) {
  return (w >> lo) & ((1u << (hi - lo + 1)) - 1u);
}

constexpr std::int32_t sext(std::uint32_t v, int width) {
  const std::uint32_t m = 1u << (width - 1);
  return static_cast<std::int32_t>((v ^ m) - m);
}

std::optional<Mnemonic> lookup(std::uint32_t word) {
  const std::uint32_t opcode = word & 0x7f;
  const std::uint32_t f3 = bits(word, 14, 12);
  const std::uint32_t f7 = bits(word, 31, 25);
  switch (opcode) {
    case kOpLui: return Mnemonic::Lui;
    case kOpAuipc: return Mnemonic::Auipc;
    case kOpJal: return Mnemonic::Jal;
    case kOpJalr:
      if (f3 == 0) return Mnemonic::Jalr;
      return std::nullopt;
    case kOpBranch:
      switch (f3) {
        case 0: return Mnemonic::Beq;
        case 1: return Mnemonic::Bne;
        case 4: return Mnemonic::Blt;
        case 5: return Mnemonic::Bge;
        case 6: return Mnemonic::Bltu;
        case 7: return Mnemonic::Bgeu;
        default: return std::nullopt;
      }
    case kOpLoad:
      switch (f3) {
        case 0: return Mnemonic::Lb;
        case 1: return Mnemonic::Lh;
        case 2: return Mnemonic::Lw;
        case 4: return Mnemonic::Lbu;
        case 5: return Mnemonic::Lhu;
        default: return std::nullopt;
      }
    case kOpStore:
      switch (f3) {
        case 0: return Mnemonic::Sb;
        case 1: return Mnemonic::Sh;
        case 2: return Mnemonic::Sw;
        default: return std::nullopt;
      }
    case kOpImm:
      switch (f3) {
        case 0: return Mnemonic::Addi;
        case 2: return Mnemonic::Slti;
        case 3: return Mnemonic::Sltiu;
        case 4: return Mnemonic::Xori;
        case 6: return Mnemonic::Ori;
        case 7: return Mnemonic::Andi;
        case 1:
          if (f7 == 0x00) return Mnemonic::Slli;
          return std::nullopt;
        case 5:
          if (f7 == 0x00) return Mnemonic::Srli;
          if (f7 == 0x20) return Mnemonic::Srai;
          return std::nullopt;
      }
      return std::nullopt;
    case kOpReg:
      if (f7 == 0x01) {
        // Division (funct3 4..7) is not part of ZMMUL.
        if (f3 <= 3) return static_cast<Mnemonic>(static_cast<int>(Mnemonic::Mul) + f3);
        return std::nullopt;
      }
      if (f7 == 0x20) {
        if (f3 == 0) return Mnemonic::Sub;
        if (f3 == 5) return Mnemonic::Sra;
        return std::nullopt;
      }
      if (f7 != 0x00) return std::nullopt;
      switch (f3) {
        case 0: return Mnemonic::Add;
        case 1: return Mnemonic::Sll;
        case 2: return Mnemonic::Slt;
        case 3: return Mnemonic::Sltu;
        case 4: return Mnemonic::Xor;
        case 5: return Mnemonic::Srl;
        case 6: return Mnemonic::Or;
        case 7: return Mnemonic::And;
      }
      return std::nullopt;
    case kOpMiscMem:
      if (f3 == 0) return Mnemonic::Fence;
      if (f3 == 1) return Mnemonic::FenceI;
      return std::nullopt;
    case kOpSystem:
      if (word == 0x00000073) return Mnemonic::Ecall;
      if (word == 0x00100073) return Mnemonic::Ebreak;
      return std::nullopt;  // CSR and privileged encodings
    default:
      return std::nullopt;
  }
}

Control control_for(Mnemonic m, Format fmt, unsigned rd) {
  Control c;
  const bool writes = fmt == Format::R || fmt == Format::U || fmt == Format::J ||
                      (fmt == Format::I && m != Mnemonic::Fence && m != Mnemonic::FenceI &&
                       m != Mnemonic::Ecall && m != Mnemonic::Ebreak);
  c.reg_write = writes && rd != 0;
  c.mem_read = is_load(m);
  c.mem_write = is_store(m);
  c.is_branch = is_branch(m);
  c.is_jump = m == Mnemonic::Jal || m == Mnemonic::Jalr;
  c.mul_en = is_mul(m);
  switch (fmt) {
    case Format::R:
    case Format::S:
    case Format::B:
      c.uses_rs1 = c.uses_rs2 = true;
      break;
    case Format::I:
      c.uses_rs1 = m != Mnemonic::Fence && m != Mnemonic::FenceI && m != Mnemonic::Ecall &&
                   m != Mnemonic::Ebreak;
      break;
    case Format::U:
    case Format::J:
      break;
  }
  return c;
}

[[noreturn]] void fail(Errc code, const char* fmt, auto... args) {
  char buf[160];
  if constexpr (sizeof...(args) == 0)
    std::snprintf(buf, sizeof buf, "%s", fmt);
  else
    std::snprintf(buf, sizeof buf, fmt, args...);
  throw Error(code, buf);
}

}  // namespace

std::int32_t gen_immediate(InstrWord w, Format fmt) {
  switch (fmt) {
    case Format::R:
      return 0;
    case Format::I:
      return sext(bits(w, 31, 20), 12);
    case Format::S:
      return sext((bits(w, 31, 25) << 5) | bits(w, 11, 7), 12);
    case Format::B:
      return sext((bits(w, 31, 31) << 12) | (bits(w, 7, 7) << 11) | (bits(w, 30, 25) << 5) |
                      (bits(w, 11, 8) << 1),
                  13);
    case Format::U:
      return static_cast<std::int32_t>(w & 0xfffff000u);
    case Format::J:
      return sext((bits(w, 31, 31) << 20) | (bits(w, 19, 12) << 12) | (bits(w, 20, 20) << 11) |
                      (bits(w, 30, 21) << 1),
                  21);
  }
  return 0;
}

std::optional<DecodedInstr> try_decode(InstrWord word) {
  if ((word & 0x3) != 0x3) return std::nullopt;
  const auto m = lookup(word);
  if (!m) return std::nullopt;

  DecodedInstr d;
  d.word = word;
  d.mnemonic = *m;
  d.fmt = enc(*m).fmt;
  d.funct3 = static_cast<std::uint8_t>(bits(word, 14, 12));
  d.funct7 = static_cast<std::uint8_t>(bits(word, 31, 25));
  d.imm = gen_immediate(word, d.fmt);
  if (is_shift_imm(*m)) d.imm = static_cast<std::int32_t>(bits(word, 24, 20));

  const bool fence_or_system = *m == Mnemonic::Fence || *m == Mnemonic::FenceI ||
                               *m == Mnemonic::Ecall || *m == Mnemonic::Ebreak;
  if (d.fmt != Format::S && d.fmt != Format::B && !fence_or_system)
    d.rd = static_cast<std::uint8_t>(bits(word, 11, 7));
  if (d.fmt != Format::U && d.fmt != Format::J && !fence_or_system)
    d.rs1 = static_cast<std::uint8_t>(bits(word, 19, 15));
  if (d.fmt == Format::R || d.fmt == Format::S || d.fmt == Format::B)
    d.rs2 = static_cast<std::uint8_t>(bits(word, 24, 20));
  d.control = control_for(*m, d.fmt, d.rd);
  return d;
}

DecodedInstr decode(InstrWord word) {
  if ((word & 0x3) != 0x3) fail(Errc::IllegalInstruction, "compressed encoding 0x%08x", word);
  auto d = try_decode(word);
  if (!d) fail(Errc::IllegalInstruction, "illegal instruction 0x%08x", word);
  return *d;
}

InstrWord encode(Mnemonic m, unsigned rd, unsigned rs1, unsigned rs2, std::int32_t imm) {
  const Encoding& e = enc(m);
  if (rd > 31 || rs1 > 31 || rs2 > 31)
    fail(Errc::InvalidOperandForFormat, "%s: register index out of range",
         std::string(e.name).c_str());

  auto require_zero = [&](unsigned v, const char* what) {
    if (v != 0)
      fail(Errc::InvalidOperandForFormat, "%s does not take %s", std::string(e.name).c_str(),
           what);
  };
  auto require_range = [&](std::int64_t lo, std::int64_t hi) {
    if (imm < lo || imm > hi)
      fail(Errc::OutOfRangeImmediate, "%s: immediate %d outside [%lld, %lld]",
           std::string(e.name).c_str(), imm, static_cast<long long>(lo),
           static_cast<long long>(hi));
  };

  const auto u = static_cast<std::uint32_t>(imm);
  const std::uint32_t base = e.opcode | (std::uint32_t{e.funct3} << 12);

  switch (m) {
    case Mnemonic::Fence:
    case Mnemonic::FenceI:
    case Mnemonic::Ecall:
    case Mnemonic::Ebreak:
      require_zero(rd, "rd");
      require_zero(rs1, "rs1");
      require_zero(rs2, "rs2");
      if (m == Mnemonic::Fence) return 0x0ff0000f;
      if (m == Mnemonic::FenceI) return 0x0000100f;
      if (m == Mnemonic::Ecall) return 0x00000073;
      return 0x00100073;
    default:
      break;
  }

  switch (e.fmt) {
    case Format::R:
      require_zero(static_cast<unsigned>(imm != 0), "an immediate");
      return base | (rd << 7) | (rs1 << 15) | (rs2 << 20) | (std::uint32_t{e.funct7} << 25);
    case Format::I:
      require_zero(rs2, "rs2");
      if (is_shift_imm(m)) {
        require_range(0, 31);
        return base | (rd << 7) | (rs1 << 15) | (u << 20) | (std::uint32_t{e.funct7} << 25);
      }
      require_range(-2048, 2047);
      return base | (rd << 7) | (rs1 << 15) | ((u & 0xfff) << 20);
    case Format::S:
      require_zero(rd, "rd");
      require_range(-2048, 2047);
      return base | ((u & 0x1f) << 7) | (rs1 << 15) | (rs2 << 20) | (((u >> 5) & 0x7f) << 25);
    case Format::B:
      require_zero(rd, "rd");
      require_range(-4096, 4094);
      if (u & 1) fail(Errc::InvalidOperandForFormat, "%s: odd branch offset %d",
                      std::string(e.name).c_str(), imm);
      return base | (((u >> 11) & 1) << 7) | (((u >> 1) & 0xf) << 8) | (rs1 << 15) |
             (rs2 << 20) | (((u >> 5) & 0x3f) << 25) | (((u >> 12) & 1) << 31);
    case Format::U:
      require_zero(rs1, "rs1");
      require_zero(rs2, "rs2");
      if (u & 0xfff)
        fail(Errc::OutOfRangeImmediate, "%s: immediate 0x%08x has nonzero low 12 bits",
             std::string(e.name).c_str(), u);
      return e.opcode | (rd << 7) | u;
    case Format::J:
      require_zero(rs1, "rs1");
      require_zero(rs2, "rs2");
      require_range(-(1 << 20), (1 << 20) - 2);
      if (u & 1) fail(Errc::InvalidOperandForFormat, "jal: odd offset %d", imm);
      return e.opcode | (rd << 7) | (((u >> 12) & 0xff) << 12) | (((u >> 11) & 1) << 20) |
             (((u >> 1) & 0x3ff) << 21) | (((u >> 20) & 1) << 31);
  }
  fail(Errc::InvalidOperandForFormat, "unencodable mnemonic");
}

std::string disassemble(const DecodedInstr& d) {
  const std::string_view name = mnemonic_name(d.mnemonic);
  char buf[64];
  const int n = static_cast<int>(name.size());
  const char* nm = name.data();
  switch (d.mnemonic) {
    case Mnemonic::Fence:
    case Mnemonic::FenceI:
    case Mnemonic::Ecall:
    case Mnemonic::Ebreak:
      return std::string(name);
    case Mnemonic::Lui:
    case Mnemonic::Auipc:
      std::snprintf(buf, sizeof buf, "%.*s x%u, 0x%x", n, nm, d.rd,
                    static_cast<std::uint32_t>(d.imm) >> 12);
      return buf;
    case Mnemonic::Jal:
      std::snprintf(buf, sizeof buf, "jal x%u, %d", d.rd, d.imm);
      return buf;
    default:
      break;
  }
  if (is_load(d.mnemonic) || d.mnemonic == Mnemonic::Jalr) {
    std::snprintf(buf, sizeof buf, "%.*s x%u, %d(x%u)", n, nm, d.rd, d.imm, d.rs1);
  } else if (is_store(d.mnemonic)) {
    std::snprintf(buf, sizeof buf, "%.*s x%u, %d(x%u)", n, nm, d.rs2, d.imm, d.rs1);
  } else if (d.fmt == Format::B) {
    std::snprintf(buf, sizeof buf, "%.*s x%u, x%u, %d", n, nm, d.rs1, d.rs2, d.imm);
  } else if (d.fmt == Format::R) {
    std::snprintf(buf, sizeof buf, "%.*s x%u, x%u, x%u", n, nm, d.rd, d.rs1, d.rs2);
  } else {
    std::snprintf(buf, sizeof buf, "%.*s x%u, x%u, %d", n, nm, d.rd, d.rs1, d.imm);
  }
  return buf;
}

std::string_view mnemonic_name(Mnemonic m) { return enc(m).name; }

std::optional<Mnemonic> parse_mnemonic(std::string_view name) {
  for (const auto& e : kTable)
    if (e.name == name) return e.m;
  return std::nullopt;
}

Format format_of(Mnemonic m) { return enc(m).fmt; }

bool is_load(Mnemonic m) { return m >= Mnemonic::Lb && m <= Mnemonic::Lhu; }
bool is_store(Mnemonic m) { return m >= Mnemonic::Sb && m <= Mnemonic::Sw; }
bool is_branch(Mnemonic m) { return m >= Mnemonic::Beq && m <= Mnemonic::Bgeu; }
bool is_mul(Mnemonic m) { return m >= Mnemonic::Mul && m <= Mnemonic::Mulhu; }
bool is_shift_imm(Mnemonic m) { return m >= Mnemonic::Slli && m <= Mnemonic::Srai; }

unsigned access_width(Mnemonic m) {
  switch (m) {
    case Mnemonic::Lb:
    case Mnemonic::Lbu:
    case Mnemonic::Sb:
      return 1;
    case Mnemonic::Lh:
    case Mnemonic::Lhu:
    case Mnemonic::Sh:
      return 2;
    case Mnemonic::Lw:
    case Mnemonic::Sw:
      return 4;
    default:
      return 0;
  }
}

std::span<const Mnemonic> all_mnemonics() { return kAll; }

}  // namespace vercore::isa
