#include "vercore/mul.hpp"

#include <algorithm>

#include "vercore/error.hpp"

namespace vercore::mul {

namespace {

u128 to_vec(std::int64_t v) { return static_cast<u128>(static_cast<__int128>(v)) & kMask; }

void advance_to(MulUnitState& u, unsigned phases) {
  while (u.phase < phases) {
    switch (u.phase) {
      case 0: {
        const std::int64_t a = extend_operand(u.pending.a, rs1_signed(u.pending.op));
        const std::int64_t b = extend_operand(u.pending.b, rs2_signed(u.pending.op));
        const PartialProducts pps = gen_partial_products(a, booth_encode(b));
        u.operands.assign(pps.begin(), pps.end());
        break;
      }
      case 1:
        while (u.operands.size() > 8) u.operands = wallace_layer(u.operands);
        break;
      case 2:
        while (u.operands.size() > 2) u.operands = wallace_layer(u.operands);
        break;
      case 3: {
        const u128 full = (u.operands[0] + u.operands[1]) & kMask;
        u.result = u.pending.op == MulOp::Mul ? static_cast<std::uint32_t>(full)
                                              : static_cast<std::uint32_t>(full >> 32);
        u.operands.clear();
        break;
      }
    }
    ++u.phase;
  }
}

unsigned phases_due(unsigned stage, unsigned latency) {
  if (stage >= latency) return 4;
  return std::min(stage, 3u);
}

}  // namespace

std::int64_t extend_operand(std::uint32_t v, bool is_signed) {
  return is_signed ? std::int64_t{static_cast<std::int32_t>(v)} : std::int64_t{v};
}

bool rs1_signed(MulOp op) { return op != MulOp::Mulhu; }
bool rs2_signed(MulOp op) { return op == MulOp::Mul || op == MulOp::Mulh; }

BoothDigits booth_encode(std::int64_t multiplier) {
  // Truncate to 33 bits and sign-extend, so bit 33 repeats bit 32.
  const std::int64_t m = (multiplier << 31) >> 31;
  auto bit = [m](int j) -> int { return j < 0 ? 0 : static_cast<int>((m >> j) & 1); };
  BoothDigits out;
  for (int i = 0; i < kDigits; ++i)
    out.digits[i] = static_cast<std::int8_t>(-2 * bit(2 * i + 1) + bit(2 * i) + bit(2 * i - 1));
  return out;
}

std::int64_t booth_value(const BoothDigits& d) {
  std::int64_t v = 0;
  for (int i = kDigits - 1; i >= 0; --i) v = v * 4 + d.digits[i];
  return v;
}

PartialProducts gen_partial_products(std::int64_t multiplicand, const BoothDigits& digits) {
  const u128 x = to_vec(multiplicand);
  const u128 x2 = (x << 1) & kMask;
  PartialProducts pps{};
  for (int i = 0; i < kDigits; ++i) {
    const int d = digits.digits[i];
    const int mag = d < 0 ? -d : d;
    u128 sel = mag == 2 ? x2 : mag == 1 ? x : 0;
    if (d < 0) sel = (~sel + 1) & kMask;
    pps[i] = (sel << (2 * i)) & kMask;
  }
  return pps;
}

CsaPair csa(u128 a, u128 b, u128 c) {
  a &= kMask;
  b &= kMask;
  c &= kMask;
  return {a ^ b ^ c, (((a & b) | (a & c) | (b & c)) << 1) & kMask};
}

std::vector<u128> wallace_layer(const std::vector<u128>& operands) {
  std::vector<u128> out;
  out.reserve(operands.size());
  std::size_t i = 0;
  for (; i + 3 <= operands.size(); i += 3) {
    const CsaPair p = csa(operands[i], operands[i + 1], operands[i + 2]);
    out.push_back(p.sum);
    out.push_back(p.carry);
  }
  for (; i < operands.size(); ++i) out.push_back(operands[i]);
  return out;
}

std::vector<std::vector<u128>> wallace_layers(const PartialProducts& pps) {
  std::vector<std::vector<u128>> layers;
  layers.emplace_back(pps.begin(), pps.end());
  while (layers.back().size() > 2) layers.push_back(wallace_layer(layers.back()));
  return layers;
}

CsaPair wallace_reduce(const PartialProducts& pps) {
  const auto layers = wallace_layers(pps);
  const auto& last = layers.back();
  return {last[0], last.size() > 1 ? last[1] : 0};
}

std::uint32_t mul_result(const MulRequest& req) {
  const std::int64_t a = extend_operand(req.a, rs1_signed(req.op));
  const std::int64_t b = extend_operand(req.b, rs2_signed(req.op));
  const CsaPair pair = wallace_reduce(gen_partial_products(a, booth_encode(b)));
  const u128 full = (pair.sum + pair.carry) & kMask;
  return req.op == MulOp::Mul ? static_cast<std::uint32_t>(full)
                              : static_cast<std::uint32_t>(full >> 32);
}

MulUnitState make_unit(unsigned latency) {
  MulUnitState u;
  u.latency = std::max(latency, 1u);
  return u;
}

MulUnitState tick(const MulUnitState& unit, const std::optional<MulRequest>& issue,
                  bool consumer_ready) {
  MulUnitState next = unit;
  next.out_ready = consumer_ready;
  const bool consumed = unit.out_valid && consumer_ready;
  if (issue && unit.busy && !consumed)
    throw Error(Errc::IssueWhileBusy, "multiplier issue while a request is outstanding");

  if (consumed) {
    next.busy = false;
    next.out_valid = false;
    next.stage = 0;
    next.phase = 0;
    next.operands.clear();
    ++next.completed;
  } else if (unit.busy && !unit.out_valid) {
    ++next.stage;
    advance_to(next, phases_due(next.stage, next.latency));
    next.out_valid = next.stage >= next.latency;
  }

  if (issue) {
    next.busy = true;
    next.pending = *issue;
    next.stage = 1;
    next.phase = 0;
    next.operands.clear();
    ++next.issued;
    advance_to(next, phases_due(next.stage, next.latency));
    next.out_valid = next.stage >= next.latency;
  }
  return next;
}

}  // namespace vercore::mul
