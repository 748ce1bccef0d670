#include "random_program.hpp"

#include <array>
#include <random>
#include <string>

namespace vercore::testkit {

using isa::Mnemonic;

namespace {

constexpr unsigned kLoopReg = 30;
constexpr unsigned kDataReg = 31;

class Generator {
 public:
  Generator(std::uint64_t seed, const RandomProgramOptions& opts)
      : rng_(seed), opts_(opts), b_(opts.base) {}

  ProgramBuilder build() {
    for (;;) {
      b_ = ProgramBuilder(opts_.base);
      label_counter_ = 0;
      in_loop_ = false;
      b_.lui(kDataReg, opts_.data_base);
      // Seed a few registers with random values.
      for (unsigned r = 1; r <= 4; ++r) b_.li(pick_dest(), static_cast<std::uint32_t>(rng_()));

      const unsigned target = opts_.min_instrs + uniform(opts_.max_instrs - opts_.min_instrs);
      while (b_.size() + 2 < target) block();
      b_.li(10, static_cast<std::uint32_t>(uniform(255)));
      b_.ecall();
      if (b_.size() >= opts_.min_instrs && b_.size() <= opts_.max_instrs) return b_;
    }
  }

 private:
  unsigned uniform(unsigned n) { return n == 0 ? 0 : static_cast<unsigned>(rng_() % (n + 1)); }
  bool chance(unsigned percent) { return uniform(99) < percent; }

  unsigned pick_dest() {
    const unsigned r = chance(5) ? 0 : 1 + uniform(28);  // x1..x29, occasionally x0
    recent_[recent_pos_++ % recent_.size()] = r;
    return r;
  }

  unsigned pick_src() {
    if (chance(60)) return recent_[uniform(static_cast<unsigned>(recent_.size()) - 1)];
    return uniform(29);
  }

  std::int32_t simm12() {
    switch (uniform(3)) {
      case 0: return static_cast<std::int32_t>(uniform(15)) - 8;
      case 1: return 2047 - static_cast<std::int32_t>(uniform(3));
      case 2: return -2048 + static_cast<std::int32_t>(uniform(3));
      default: return static_cast<std::int32_t>(uniform(4095)) - 2048;
    }
  }

  void alu_op() {
    static constexpr Mnemonic r_ops[] = {Mnemonic::Add, Mnemonic::Sub, Mnemonic::Sll,
                                         Mnemonic::Slt, Mnemonic::Sltu, Mnemonic::Xor,
                                         Mnemonic::Srl, Mnemonic::Sra, Mnemonic::Or,
                                         Mnemonic::And, Mnemonic::Mul, Mnemonic::Mulh,
                                         Mnemonic::Mulhsu, Mnemonic::Mulhu};
    static constexpr Mnemonic i_ops[] = {Mnemonic::Addi, Mnemonic::Slti, Mnemonic::Sltiu,
                                         Mnemonic::Xori, Mnemonic::Ori, Mnemonic::Andi};
    static constexpr Mnemonic sh_ops[] = {Mnemonic::Slli, Mnemonic::Srli, Mnemonic::Srai};
    switch (uniform(4)) {
      case 0:
      case 1: {
        const Mnemonic m = r_ops[uniform(std::size(r_ops) - 1)];
        const unsigned a = pick_src(), c = pick_src();
        b_.r(m, pick_dest(), a, c);
        break;
      }
      case 2: {
        const unsigned a = pick_src();
        b_.i(i_ops[uniform(std::size(i_ops) - 1)], pick_dest(), a, simm12());
        break;
      }
      case 3: {
        const unsigned a = pick_src();
        b_.i(sh_ops[uniform(2)], pick_dest(), a, static_cast<std::int32_t>(uniform(31)));
        break;
      }
      default:
        if (chance(50))
          b_.lui(pick_dest(), static_cast<std::uint32_t>(rng_()) & 0xfffff000u);
        else
          b_.auipc(pick_dest(), static_cast<std::uint32_t>(rng_()) & 0xfffff000u);
        break;
    }
  }

  void mem_op() {
    static constexpr Mnemonic loads[] = {Mnemonic::Lb, Mnemonic::Lh, Mnemonic::Lw, Mnemonic::Lbu,
                                         Mnemonic::Lhu};
    static constexpr Mnemonic stores[] = {Mnemonic::Sb, Mnemonic::Sh, Mnemonic::Sw};
    const bool is_store = chance(50);
    const Mnemonic m = is_store ? stores[uniform(2)] : loads[uniform(4)];
    const unsigned width = isa::access_width(m);
    const auto offset = static_cast<std::int32_t>(uniform(63) * 4 + (uniform(3) & ~(width - 1)));
    if (is_store) {
      b_.store(m, pick_src(), kDataReg, offset);
    } else {
      b_.load(m, pick_dest(), kDataReg, offset);
      if (chance(50)) alu_op();  // frequently a load-use pair
    }
  }

  std::string fresh_label() { return "L" + std::to_string(label_counter_++); }

  void forward_branch() {
    static constexpr Mnemonic ops[] = {Mnemonic::Beq, Mnemonic::Bne, Mnemonic::Blt,
                                       Mnemonic::Bge, Mnemonic::Bltu, Mnemonic::Bgeu};
    const std::string target = fresh_label();
    const unsigned a = pick_src(), c = pick_src();
    b_.branch(ops[uniform(5)], a, c, target);
    const unsigned skip = uniform(3);
    for (unsigned k = 0; k < skip; ++k) alu_op();
    b_.label(target);
  }

  void forward_jump() {
    const std::string target = fresh_label();
    if (chance(50)) {
      b_.jal(pick_dest(), target);
      for (unsigned k = uniform(2); k > 0; --k) alu_op();
      b_.label(target);
    } else {
      // auipc + jalr to a target a few words ahead.
      const unsigned r = 1 + uniform(28);
      const unsigned skip = uniform(2);
      b_.auipc(r, 0);
      b_.jalr(pick_dest(), r, static_cast<std::int32_t>(4 * (2 + skip)));
      for (unsigned k = 0; k < skip; ++k) alu_op();
    }
  }

  void counted_loop() {
    if (in_loop_) return alu_op();
    in_loop_ = true;
    const std::string top = fresh_label();
    b_.li(kLoopReg, 1 + uniform(4));
    b_.label(top);
    for (unsigned k = 1 + uniform(4); k > 0; --k) block();
    b_.i(Mnemonic::Addi, kLoopReg, kLoopReg, -1);
    b_.branch(Mnemonic::Bne, kLoopReg, 0, top);
    in_loop_ = false;
  }

  void block() {
    const unsigned roll = uniform(99);
    if (roll < 45) alu_op();
    else if (roll < 70) mem_op();
    else if (roll < 82) forward_branch();
    else if (roll < 92) forward_jump();
    else if (roll < 96) counted_loop();
    else b_.emit(chance(50) ? Mnemonic::Fence : Mnemonic::FenceI, 0, 0, 0, 0);
  }

  std::mt19937_64 rng_;
  RandomProgramOptions opts_;
  ProgramBuilder b_;
  std::array<unsigned, 4> recent_{1, 2, 3, 4};
  std::size_t recent_pos_ = 0;
  unsigned label_counter_ = 0;
  bool in_loop_ = false;
};

}  // namespace

ProgramBuilder random_program(std::uint64_t seed, const RandomProgramOptions& opts) {
  return Generator(seed, opts).build();
}

}  // namespace vercore::testkit
