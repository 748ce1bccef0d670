#include "corpus.hpp"

#include <functional>

#include "random_program.hpp"
#include "vercore/asm.hpp"

#ifndef VERCORE_FIXTURE_DIR
#error "VERCORE_FIXTURE_DIR must be defined"
#endif

namespace vercore::testkit {

using isa::Mnemonic;

namespace {

constexpr std::uint32_t kData = 0x10000;

const std::uint32_t kEdgeValues[] = {0,          1,          2,          0x7fffffff, 0x80000000,
                                     0xffffffff, 0xfffffffe, 0x00000800, 0x12345678, 0x9abcdef0,
                                     0x0000ffff, 0xffff8000, 0x000000ff, 0x00000080};

CorpusProgram finish(std::string name, ProgramBuilder& b) {
  b.li(10, 0).ecall();
  return {std::move(name), b.image(), b.base()};
}

void prologue(ProgramBuilder& b) { b.lui(31, kData); }

void r_type(ProgramBuilder& b, Mnemonic m) {
  unsigned dst = 3;
  for (std::uint32_t a : kEdgeValues)
    for (std::uint32_t c : {0u, 1u, 31u, 32u, 0x80000000u, 0xffffffffu, 0x9abcdef0u}) {
      b.li(1, a).li(2, c).r(m, dst, 1, 2);
      b.store(Mnemonic::Sw, dst, 31, static_cast<std::int32_t>(4 * (dst - 3)));
      dst = dst == 20 ? 3 : dst + 1;
    }
}

void i_type(ProgramBuilder& b, Mnemonic m) {
  const bool shift = isa::is_shift_imm(m);
  const std::int32_t imms_alu[] = {0, 1, -1, 2047, -2048, 0x555, -0x556};
  const std::int32_t imms_shift[] = {0, 1, 7, 16, 31};
  for (std::uint32_t a : kEdgeValues) {
    b.li(1, a);
    if (shift)
      for (std::int32_t imm : imms_shift) b.i(m, 2, 1, imm).store(Mnemonic::Sw, 2, 31, 0);
    else
      for (std::int32_t imm : imms_alu) b.i(m, 2, 1, imm).store(Mnemonic::Sw, 2, 31, 0);
  }
}

void load_test(ProgramBuilder& b, Mnemonic m) {
  const unsigned width = isa::access_width(m);
  b.li(1, 0x80ff7f01).store(Mnemonic::Sw, 1, 31, 0);
  b.li(1, 0xfedcba98).store(Mnemonic::Sw, 1, 31, 4);
  for (std::int32_t off = 0; off < 8; off += static_cast<std::int32_t>(width)) {
    b.load(m, 2, 31, off);
    b.i(Mnemonic::Addi, 3, 2, 1);  // use immediately
  }
  b.li(4, kData + 0x7f0).load(m, 5, 4, -0x7f0 + 4);
}

void store_test(ProgramBuilder& b, Mnemonic m) {
  const unsigned width = isa::access_width(m);
  b.li(1, 0xa1b2c3d4);
  for (std::int32_t off = 0; off < 8; off += static_cast<std::int32_t>(width)) {
    b.store(m, 1, 31, off);
    b.load(Mnemonic::Lw, 2, 31, off & ~3);
    b.i(Mnemonic::Addi, 1, 1, 0x111);
  }
  b.li(4, kData + 0x100).store(m, 1, 4, -4 * static_cast<std::int32_t>(width));
}

void branch_test(ProgramBuilder& b, Mnemonic m) {
  int label = 0;
  const std::pair<std::uint32_t, std::uint32_t> pairs[] = {
      {0, 0}, {1, 2}, {2, 1}, {0xffffffff, 1}, {1, 0xffffffff}, {0x80000000, 0x7fffffff},
      {5, 5}};
  for (auto [x, y] : pairs) {
    const std::string skip = "skip" + std::to_string(label++);
    b.li(1, x).li(2, y).li(3, 0);
    b.branch(m, 1, 2, skip);
    b.i(Mnemonic::Addi, 3, 3, 1);
    b.label(skip);
    b.store(Mnemonic::Sw, 3, 31, 0);
  }
  // Backward taken branch closing a loop.
  b.li(5, 3).li(6, 0).label("back").i(Mnemonic::Addi, 6, 6, 1).i(Mnemonic::Addi, 5, 5, -1);
  b.branch(Mnemonic::Bne, 5, 0, "back");
}

void jump_test(ProgramBuilder& b, Mnemonic m) {
  if (m == Mnemonic::Jal) {
    b.jal(1, "a").i(Mnemonic::Addi, 2, 0, 1).label("a");
    b.jal(0, "b").i(Mnemonic::Addi, 2, 0, 2).label("b");
    b.jal(5, "c").nop().nop().label("c").i(Mnemonic::Addi, 6, 5, 0);
  } else {
    b.auipc(1, 0).jalr(2, 1, 12).i(Mnemonic::Addi, 3, 0, 1);
    b.auipc(1, 0).i(Mnemonic::Addi, 1, 1, 17).jalr(4, 1, -1).nop();  // target bit 0 cleared
    b.auipc(7, 0).jalr(0, 7, 8).nop();
  }
}

void upper_test(ProgramBuilder& b, Mnemonic m) {
  for (std::uint32_t v : {0u, 0x1000u, 0x7ffff000u, 0x80000000u, 0xfffff000u}) {
    if (m == Mnemonic::Lui)
      b.lui(1, v);
    else
      b.auipc(1, v);
    b.i(Mnemonic::Addi, 2, 1, 1);
  }
}

void system_test(ProgramBuilder& b, Mnemonic m) {
  b.li(1, 5).emit(m == Mnemonic::Ecall || m == Mnemonic::Ebreak ? Mnemonic::Fence : m, 0, 0, 0, 0);
  b.i(Mnemonic::Addi, 2, 1, 1);
}

CorpusProgram directed(Mnemonic m) {
  ProgramBuilder b;
  prologue(b);
  const std::string name = "isa_" + std::string(isa::mnemonic_name(m));
  switch (isa::format_of(m)) {
    case isa::Format::R: r_type(b, m); break;
    case isa::Format::S: store_test(b, m); break;
    case isa::Format::B: branch_test(b, m); break;
    case isa::Format::U: upper_test(b, m); break;
    case isa::Format::J: jump_test(b, m); break;
    case isa::Format::I:
      if (isa::is_load(m)) load_test(b, m);
      else if (m == Mnemonic::Jalr) jump_test(b, m);
      else if (m == Mnemonic::Fence || m == Mnemonic::FenceI || m == Mnemonic::Ecall ||
               m == Mnemonic::Ebreak)
        system_test(b, m);
      else i_type(b, m);
      break;
  }
  if (m == Mnemonic::Ebreak) {
    b.ebreak();
    return {name, b.image(), b.base()};
  }
  if (m == Mnemonic::Ecall) {
    b.li(10, 77).ecall();  // halts with code 77
    return {name, b.image(), b.base()};
  }
  return finish(name, b);
}

using Recipe = std::function<void(ProgramBuilder&)>;

CorpusProgram from_recipe(const std::string& name, const Recipe& r) {
  ProgramBuilder b;
  prologue(b);
  r(b);
  return finish(name, b);
}

}  // namespace

std::string fixture_dir() { return VERCORE_FIXTURE_DIR; }
std::string fixture_path(const std::string& file) { return fixture_dir() + "/" + file; }

std::vector<CorpusProgram> directed_isa_programs() {
  std::vector<CorpusProgram> out;
  for (Mnemonic m : isa::all_mnemonics()) out.push_back(directed(m));
  return out;
}

std::vector<CorpusProgram> hazard_programs() {
  using M = Mnemonic;
  std::vector<std::pair<std::string, Recipe>> recipes = {
      {"fwd_ex_mem", [](ProgramBuilder& b) { b.i(M::Addi, 1, 0, 7).r(M::Add, 2, 1, 1).r(M::Sub, 3, 2, 1); }},
      {"fwd_mem_wb", [](ProgramBuilder& b) { b.i(M::Addi, 1, 0, 7).nop().r(M::Add, 2, 1, 1); }},
      {"fwd_wb_regfile", [](ProgramBuilder& b) { b.i(M::Addi, 1, 0, 7).nop().nop().r(M::Add, 2, 1, 1); }},
      {"fwd_priority", [](ProgramBuilder& b) {
         b.i(M::Addi, 1, 0, 1).i(M::Addi, 1, 1, 1).i(M::Addi, 1, 1, 1).r(M::Add, 2, 1, 1);
       }},
      {"load_use_alu", [](ProgramBuilder& b) {
         b.li(1, 0x1234).store(M::Sw, 1, 31, 0).load(M::Lw, 2, 31, 0).r(M::Add, 3, 2, 2);
       }},
      {"load_use_rs2", [](ProgramBuilder& b) {
         b.li(1, 9).store(M::Sw, 1, 31, 0).load(M::Lw, 2, 31, 0).r(M::Sub, 3, 1, 2);
       }},
      {"load_use_store_data", [](ProgramBuilder& b) {
         b.li(1, 0x55).store(M::Sw, 1, 31, 0).load(M::Lw, 2, 31, 0).store(M::Sw, 2, 31, 8).load(M::Lw, 3, 31, 8);
       }},
      {"load_use_address", [](ProgramBuilder& b) {
         b.store(M::Sw, 31, 31, 0).load(M::Lw, 2, 31, 0).load(M::Lw, 3, 2, 0);
       }},
      {"load_independent_use", [](ProgramBuilder& b) {
         b.li(1, 3).store(M::Sw, 1, 31, 0).load(M::Lw, 2, 31, 0).i(M::Addi, 4, 0, 1).r(M::Add, 3, 2, 2);
       }},
      {"store_data_forward", [](ProgramBuilder& b) {
         b.i(M::Addi, 1, 0, 11).store(M::Sw, 1, 31, 0).i(M::Addi, 1, 1, 1).nop().store(M::Sw, 1, 31, 4);
         b.load(M::Lw, 2, 31, 0).load(M::Lw, 3, 31, 4);
       }},
      {"branch_on_ex", [](ProgramBuilder& b) {
         b.i(M::Addi, 1, 0, 5).branch(M::Beq, 1, 0, "t").i(M::Addi, 2, 0, 1).label("t");
         b.i(M::Addi, 3, 0, 5).branch(M::Beq, 1, 3, "u").i(M::Addi, 2, 0, 2).label("u");
       }},
      {"branch_on_mem", [](ProgramBuilder& b) {
         b.i(M::Addi, 1, 0, 5).nop().branch(M::Bne, 1, 0, "t").i(M::Addi, 2, 0, 1).label("t");
       }},
      {"branch_on_load", [](ProgramBuilder& b) {
         b.li(1, 4).store(M::Sw, 1, 31, 0).load(M::Lw, 2, 31, 0).branch(M::Bne, 2, 1, "t");
         b.load(M::Lw, 3, 31, 0).nop().branch(M::Beq, 3, 1, "t").i(M::Addi, 5, 0, 1).label("t");
       }},
      {"jalr_on_load", [](ProgramBuilder& b) {
         b.auipc(1, 0).i(M::Addi, 1, 1, 24).store(M::Sw, 1, 31, 0).load(M::Lw, 2, 31, 0);
         b.jalr(3, 2, 0).i(M::Addi, 4, 0, 1).i(M::Addi, 5, 3, 0);
       }},
      {"jalr_on_alu", [](ProgramBuilder& b) { b.auipc(1, 0).jalr(2, 1, 12).nop().r(M::Add, 3, 2, 2); }},
      {"jal_link_use", [](ProgramBuilder& b) { b.jal(1, "t").nop().label("t").i(M::Addi, 2, 1, 0).r(M::Add, 3, 1, 2); }},
      {"jal_chain", [](ProgramBuilder& b) {
         for (int k = 0; k < 8; ++k) b.jal(0, "j" + std::to_string(k)).label("j" + std::to_string(k));
       }},
      {"mul_chain", [](ProgramBuilder& b) {
         b.li(1, 0x12345678).li(2, 0x9abcdef0).r(M::Mul, 3, 1, 2).r(M::Mulh, 4, 3, 3);
         b.r(M::Mulhu, 5, 4, 3).r(M::Mulhsu, 6, 5, 1).r(M::Add, 7, 6, 5);
       }},
      {"mul_then_branch", [](ProgramBuilder& b) {
         b.li(1, 3).li(2, 5).r(M::Mul, 3, 1, 2).i(M::Addi, 4, 0, 15).branch(M::Beq, 3, 4, "t");
         b.i(M::Addi, 5, 0, 1).label("t");
       }},
      {"mul_then_store", [](ProgramBuilder& b) {
         b.li(1, 3).li(2, 7).r(M::Mul, 3, 1, 2).store(M::Sw, 3, 31, 0).load(M::Lw, 4, 31, 0);
       }},
      {"load_then_mul", [](ProgramBuilder& b) {
         b.li(1, 6).store(M::Sw, 1, 31, 0).load(M::Lw, 2, 31, 0).r(M::Mul, 3, 2, 2);
         b.load(M::Lw, 4, 31, 0).nop().r(M::Mulhu, 5, 4, 1);
       }},
      {"mul_behind_load", [](ProgramBuilder& b) {
         b.li(1, 6).store(M::Sw, 1, 31, 0).r(M::Mul, 3, 1, 1).load(M::Lw, 2, 31, 0).r(M::Add, 4, 2, 3);
       }},
      {"x0_never_written", [](ProgramBuilder& b) {
         b.i(M::Addi, 0, 0, 5).r(M::Add, 1, 0, 0).load(M::Lw, 0, 31, 0).r(M::Add, 2, 0, 0);
         b.li(3, 9).r(M::Mul, 0, 3, 3).r(M::Add, 4, 0, 3);
       }},
      {"memory_raw", [](ProgramBuilder& b) {
         b.li(1, 0xdeadbeef).store(M::Sw, 1, 31, 0).load(M::Lw, 2, 31, 0).store(M::Sb, 2, 31, 1);
         b.load(M::Lw, 3, 31, 0).store(M::Sh, 3, 31, 2).load(M::Lhu, 4, 31, 2).load(M::Lb, 5, 31, 3);
       }},
      {"lane_sweep", [](ProgramBuilder& b) {
         b.li(1, 0x11223344);
         for (int off = 0; off < 4; ++off) b.store(M::Sb, 1, 31, off).i(M::Addi, 1, 1, 0x101);
         b.store(M::Sh, 1, 31, 4).store(M::Sh, 1, 31, 6).load(M::Lw, 2, 31, 0).load(M::Lw, 3, 31, 4);
         for (int off = 0; off < 8; ++off) b.load(M::Lb, 4, 31, off).load(M::Lbu, 5, 31, off);
         for (int off = 0; off < 8; off += 2) b.load(M::Lh, 6, 31, off).load(M::Lhu, 7, 31, off);
       }},
      {"counted_loop", [](ProgramBuilder& b) {
         b.li(30, 10).li(1, 0).label("top").r(M::Add, 1, 1, 30).store(M::Sw, 1, 31, 0);
         b.load(M::Lw, 2, 31, 0).r(M::Mul, 3, 2, 30).i(M::Addi, 30, 30, -1).branch(M::Bne, 30, 0, "top");
       }},
      {"fence_mix", [](ProgramBuilder& b) {
         b.i(M::Addi, 1, 0, 1).emit(M::Fence, 0, 0, 0, 0).r(M::Add, 2, 1, 1).emit(M::FenceI, 0, 0, 0, 0);
       }},
  };
  std::vector<CorpusProgram> out;
  for (const auto& [name, r] : recipes) out.push_back(from_recipe("hazard_" + name, r));

  // Completion signalled through a tohost store instead of ecall.
  ProgramBuilder t;
  t.lui(31, kData).li(1, 21).i(M::Slli, 1, 1, 1).i(M::Ori, 1, 1, 1).store(M::Sw, 1, 31, 0x40);
  t.label("spin").jal(0, "spin");
  CorpusProgram tp{"hazard_tohost_store", t.image(), t.base()};
  tp.image.set_tohost_addr(kData + 0x40);
  out.push_back(std::move(tp));
  return out;
}

std::vector<CorpusProgram> elf_programs() {
  std::vector<CorpusProgram> out;
  for (const char* f : {"bench.elf", "bytes.elf", "minimal.elf", "tohost.elf"}) {
    LoadedProgram p = load_program_file(fixture_path(f), ProgramFormat::Elf, 0);
    out.push_back({std::string("elf_") + f, std::move(p.image), p.entry});
  }
  return out;
}

std::vector<CorpusProgram> random_programs(std::size_t count, std::uint64_t seed) {
  std::vector<CorpusProgram> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const ProgramBuilder b = random_program(seed + k);
    out.push_back({"random_" + std::to_string(seed + k), b.image(), b.base()});
  }
  return out;
}

CorpusProgram jump_shadow_program() {
  using M = Mnemonic;
  ProgramBuilder b(0x2000);
  b.auipc(3, 0x1000);          // 0x2000: x3 = 0x3000
  b.i(M::Addi, 3, 3, 0x20);    // 0x2004: x3 = 0x3020
  b.jal(1, "target");          // 0x2008: x1 = 0x200c
  b.auipc(5, 0x1000);          // 0x200c: must not execute
  b.i(M::Addi, 6, 0, 1);       // 0x2010: must not execute
  b.nop().nop().nop();
  b.label("target");
  b.i(M::Addi, 2, 3, 0x204);   // 0x2020: x2 = 0x3224
  b.li(10, 0).ecall();
  return {"jump_shadow", b.image(), b.base()};
}

}  // namespace vercore::testkit
