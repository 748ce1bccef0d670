#include "vercore/golden.hpp"

#include <cinttypes>
#include <cstdio>
#include <ostream>

namespace vercore {

using isa::Mnemonic;

std::string_view halt_kind_name(HaltCause::Kind k) {
  switch (k) {
    case HaltCause::Kind::Ecall: return "ecall";
    case HaltCause::Kind::Ebreak: return "ebreak";
    case HaltCause::Kind::TohostStore: return "tohost_store";
    case HaltCause::Kind::MaxSteps: return "max_steps";
    case HaltCause::Kind::MaxCycles: return "max_cycles";
    case HaltCause::Kind::Error: return "error";
  }
  return "unknown";
}

std::string describe(const HaltCause& h) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s pc=0x%08x code=%u", std::string(halt_kind_name(h.kind)).c_str(),
                h.pc, h.code);
  std::string out = buf;
  if (!h.message.empty()) out += ": " + h.message;
  return out;
}

namespace {

HaltCause error_halt(std::uint32_t pc, Errc code, std::string msg) {
  HaltCause h;
  h.kind = HaltCause::Kind::Error;
  h.pc = pc;
  h.error = code;
  h.message = std::move(msg);
  return h;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

std::uint32_t mul_high(Mnemonic m, std::uint32_t a, std::uint32_t b) {
  const auto sa = static_cast<std::int64_t>(static_cast<std::int32_t>(a));
  const auto sb = static_cast<std::int64_t>(static_cast<std::int32_t>(b));
  switch (m) {
    case Mnemonic::Mulh:
      return static_cast<std::uint32_t>(static_cast<std::uint64_t>(sa * sb) >> 32);
    case Mnemonic::Mulhsu: {
      // 128-bit signed x unsigned product.
      const __int128 p = static_cast<__int128>(sa) * static_cast<__int128>(std::uint64_t{b});
      return static_cast<std::uint32_t>(static_cast<unsigned __int128>(p) >> 32);
    }
    default:
      return static_cast<std::uint32_t>((std::uint64_t{a} * std::uint64_t{b}) >> 32);
  }
}

}  // namespace

StepResult step(ArchState& s) {
  StepResult out;
  const std::uint32_t pc = s.pc;
  if (pc & 3) {
    out.halt = error_halt(pc, Errc::MisalignedFetch, "misaligned fetch at pc=" + hex32(pc));
    return out;
  }
  const auto word = s.mem.fetch_word(pc);
  if (!word) {
    out.halt = error_halt(pc, Errc::FetchFromUninitializedMemory,
                          "fetch from uninitialized memory at pc=" + hex32(pc));
    return out;
  }
  const auto decoded = isa::try_decode(*word);
  if (!decoded) {
    out.halt = error_halt(pc, Errc::IllegalInstruction,
                          "illegal instruction " + hex32(*word) + " at pc=" + hex32(pc));
    return out;
  }
  const isa::DecodedInstr& d = *decoded;
  const std::uint32_t a = s.regs[d.rs1];
  const std::uint32_t b = s.regs[d.rs2];
  const auto imm = static_cast<std::uint32_t>(d.imm);
  const auto sa = static_cast<std::int32_t>(a);
  const auto sb = static_cast<std::int32_t>(b);

  CommitRecord c;
  c.pc = pc;
  c.instr = *word;
  c.rd = d.rd;
  std::uint32_t next = pc + 4;
  std::optional<std::uint32_t> result;

  auto branch = [&](bool taken) {
    if (taken) next = pc + imm;
  };

  switch (d.mnemonic) {
    case Mnemonic::Lui: result = imm; break;
    case Mnemonic::Auipc: result = pc + imm; break;
    case Mnemonic::Jal:
      result = pc + 4;
      next = pc + imm;
      break;
    case Mnemonic::Jalr:
      result = pc + 4;
      next = (a + imm) & ~1u;
      break;
    case Mnemonic::Beq: branch(a == b); break;
    case Mnemonic::Bne: branch(a != b); break;
    case Mnemonic::Blt: branch(sa < sb); break;
    case Mnemonic::Bge: branch(sa >= sb); break;
    case Mnemonic::Bltu: branch(a < b); break;
    case Mnemonic::Bgeu: branch(a >= b); break;
    case Mnemonic::Lb:
    case Mnemonic::Lh:
    case Mnemonic::Lw:
    case Mnemonic::Lbu:
    case Mnemonic::Lhu: {
      const std::uint32_t addr = a + imm;
      const unsigned width = isa::access_width(d.mnemonic);
      if (addr & (width - 1)) {
        out.halt = error_halt(pc, Errc::MisalignedAccess,
                              "misaligned load at " + hex32(addr) + " pc=" + hex32(pc));
        return out;
      }
      const std::uint32_t raw = s.mem.read_data(addr, width);
      switch (d.mnemonic) {
        case Mnemonic::Lb: result = static_cast<std::uint32_t>(static_cast<std::int8_t>(raw)); break;
        case Mnemonic::Lh: result = static_cast<std::uint32_t>(static_cast<std::int16_t>(raw)); break;
        default: result = raw; break;
      }
      c.mem = MemTxn{MemTxn::Kind::Load, addr, raw, static_cast<std::uint8_t>(width)};
      break;
    }
    case Mnemonic::Sb:
    case Mnemonic::Sh:
    case Mnemonic::Sw: {
      const std::uint32_t addr = a + imm;
      const unsigned width = isa::access_width(d.mnemonic);
      if (addr & (width - 1)) {
        out.halt = error_halt(pc, Errc::MisalignedAccess,
                              "misaligned store at " + hex32(addr) + " pc=" + hex32(pc));
        return out;
      }
      const std::uint32_t value = width == 4 ? b : (b & ((1u << (8 * width)) - 1u));
      for (unsigned i = 0; i < width; ++i) s.mem.write_byte(addr + i, static_cast<std::uint8_t>(value >> (8 * i)));
      c.mem = MemTxn{MemTxn::Kind::Store, addr, value, static_cast<std::uint8_t>(width)};
      if (width == 4 && s.mem.tohost_addr() && *s.mem.tohost_addr() == addr) {
        HaltCause h;
        h.kind = HaltCause::Kind::TohostStore;
        h.code = value;
        h.pc = pc;
        out.halt = h;
      }
      break;
    }
    case Mnemonic::Addi: result = a + imm; break;
    case Mnemonic::Slti: result = sa < static_cast<std::int32_t>(imm) ? 1 : 0; break;
    case Mnemonic::Sltiu: result = a < imm ? 1 : 0; break;
    case Mnemonic::Xori: result = a ^ imm; break;
    case Mnemonic::Ori: result = a | imm; break;
    case Mnemonic::Andi: result = a & imm; break;
    case Mnemonic::Slli: result = a << (imm & 31); break;
    case Mnemonic::Srli: result = a >> (imm & 31); break;
    case Mnemonic::Srai: result = static_cast<std::uint32_t>(sa >> (imm & 31)); break;
    case Mnemonic::Add: result = a + b; break;
    case Mnemonic::Sub: result = a - b; break;
    case Mnemonic::Sll: result = a << (b & 31); break;
    case Mnemonic::Slt: result = sa < sb ? 1 : 0; break;
    case Mnemonic::Sltu: result = a < b ? 1 : 0; break;
    case Mnemonic::Xor: result = a ^ b; break;
    case Mnemonic::Srl: result = a >> (b & 31); break;
    case Mnemonic::Sra: result = static_cast<std::uint32_t>(sa >> (b & 31)); break;
    case Mnemonic::Or: result = a | b; break;
    case Mnemonic::And: result = a & b; break;
    case Mnemonic::Fence:
    case Mnemonic::FenceI:
      break;
    case Mnemonic::Ecall: {
      HaltCause h;
      h.kind = HaltCause::Kind::Ecall;
      h.code = s.regs[10];
      h.pc = pc;
      out.halt = h;
      break;
    }
    case Mnemonic::Ebreak: {
      HaltCause h;
      h.kind = HaltCause::Kind::Ebreak;
      h.pc = pc;
      out.halt = h;
      break;
    }
    case Mnemonic::Mul: result = a * b; break;
    case Mnemonic::Mulh:
    case Mnemonic::Mulhsu:
    case Mnemonic::Mulhu:
      result = mul_high(d.mnemonic, a, b);
      break;
  }

  if (next & 3) {
    // Only jumps and branches get here; nothing has been written yet.
    out.halt = error_halt(pc, Errc::MisalignedFetch,
                          "misaligned control-transfer target " + hex32(next) + " at pc=" + hex32(pc));
    out.commit.reset();
    return out;
  }

  if (result && d.rd != 0) {
    c.reg_write = true;
    c.wb_value = *result;
    s.regs[d.rd] = *result;
  }
  s.pc = next;
  ++s.retired;
  out.commit = c;
  return out;
}

RunResult run(ArchState& state, std::uint64_t max_steps) {
  RunResult r;
  for (std::uint64_t i = 0; i < max_steps; ++i) {
    StepResult st = step(state);
    if (st.commit) r.trace.push_back(*st.commit);
    if (st.halt) {
      r.halt = *st.halt;
      return r;
    }
  }
  r.halt.kind = HaltCause::Kind::MaxSteps;
  r.halt.pc = state.pc;
  return r;
}

std::vector<std::string> export_reg_trace(const std::vector<CommitRecord>& trace) {
  std::vector<std::string> lines;
  char buf[16];
  for (const auto& c : trace) {
    if (!c.reg_write || c.rd == 0) continue;
    std::snprintf(buf, sizeof buf, "%02x%08x", c.rd, c.wb_value);
    lines.emplace_back(buf);
  }
  return lines;
}

void write_reg_trace(std::ostream& out, const std::vector<CommitRecord>& trace) {
  for (const auto& line : export_reg_trace(trace)) out << line << '\n';
}

std::string format_commit(const CommitRecord& c) {
  char buf[96];
  int n = std::snprintf(buf, sizeof buf, "%08x %02x %08x", c.pc, c.reg_write ? c.rd : 0,
                        c.reg_write ? c.wb_value : 0);
  if (c.mem)
    std::snprintf(buf + n, sizeof buf - n, " %c %08x %08x %u",
                  c.mem->kind == MemTxn::Kind::Store ? 'S' : 'L', c.mem->addr, c.mem->data,
                  unsigned{c.mem->width});
  return buf;
}

void write_commit_trace(std::ostream& out, const std::vector<CommitRecord>& trace) {
  for (const auto& c : trace) out << format_commit(c) << '\n';
}

}  // namespace vercore
