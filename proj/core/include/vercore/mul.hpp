#pragma once

// Bit-accurate model of the radix-4 Booth / Wallace-tree multiplier used for
// mul, mulh, mulhsu and mulhu, and of its valid/ready pipelined wrapper.
//
// Both operands are first extended to 33 bits so a single signed datapath
// covers every signedness variant. The 33x33 product fits in 66 bits and all
// intermediate values are kept modulo 2^66.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace vercore::mul {

using u128 = unsigned __int128;

inline constexpr int kWidth = 66;
inline constexpr u128 kMask = (u128{1} << kWidth) - 1;
inline constexpr int kDigits = 17;
inline constexpr unsigned kDefaultLatency = 4;

enum class MulOp : std::uint8_t { Mul, Mulh, Mulhsu, Mulhu };

struct MulRequest {
  MulOp op = MulOp::Mul;
  std::uint32_t a = 0;  // rs1
  std::uint32_t b = 0;  // rs2
  bool operator==(const MulRequest&) const = default;
};

struct BoothDigits {
  std::array<std::int8_t, kDigits> digits{};
  bool operator==(const BoothDigits&) const = default;
};

struct CsaPair {
  u128 sum = 0;
  u128 carry = 0;
  bool operator==(const CsaPair&) const = default;
};

using PartialProducts = std::array<u128, kDigits>;

/// 33-bit operand extension (two's complement value held in an int64).
std::int64_t extend_operand(std::uint32_t v, bool is_signed);
bool rs1_signed(MulOp op);
bool rs2_signed(MulOp op);

/// Radix-4 recoding of a 33-bit two's complement multiplier, using overlapping
/// triplets (b[2i+1], b[2i], b[2i-1]) with b[-1] = 0 and bit 33 = bit 32.
BoothDigits booth_encode(std::int64_t multiplier);

/// Signed value sum(digits[i] * 4^i).
std::int64_t booth_value(const BoothDigits& d);

/// pp[i] = digits[i] * multiplicand * 4^i, as 66-bit two's complement.
PartialProducts gen_partial_products(std::int64_t multiplicand, const BoothDigits& digits);

/// 3:2 compressor over 66-bit vectors.
CsaPair csa(u128 a, u128 b, u128 c);

/// One carry-save layer: every full group of three operands becomes two,
/// leftovers pass through. 17 -> 12 -> 8 -> 6 -> 4 -> 3 -> 2.
std::vector<u128> wallace_layer(const std::vector<u128>& operands);

/// Every layer from the partial products down to two addends, inclusive of
/// both ends, so callers can check value preservation per layer.
std::vector<std::vector<u128>> wallace_layers(const PartialProducts& pps);

CsaPair wallace_reduce(const PartialProducts& pps);

/// Full datapath: extend, recode, partial products, reduce, final add.
std::uint32_t mul_result(const MulRequest& req);

/// Multi-cycle wrapper. One tick() is one clock edge. The request presented
/// with the issuing tick counts as the first of `latency` ticks; out_valid is
/// true in the state produced by the latency-th tick.
///
/// Work per tick for the default latency of 4: recode + partial products,
/// Wallace 17 -> 8, Wallace 8 -> 2, carry-propagate add.
struct MulUnitState {
  unsigned latency = kDefaultLatency;
  bool busy = false;
  unsigned stage = 0;  // ticks elapsed since (and including) issue
  MulRequest pending;
  bool out_valid = false;
  bool out_ready = false;  // consumer handshake seen on the last tick
  std::uint32_t result = 0;
  std::uint64_t issued = 0;
  std::uint64_t completed = 0;

  // Stage registers.
  unsigned phase = 0;  // datapath phases completed, 0..4
  std::vector<u128> operands;
  bool operator==(const MulUnitState&) const = default;
};

MulUnitState make_unit(unsigned latency = kDefaultLatency);

/// Advances the unit by one clock edge. A result is consumed (busy and
/// out_valid clear) on the first tick where out_valid && consumer_ready; a new
/// request may be issued on that same tick. Throws Error{IssueWhileBusy} if
/// `issue` is given while the unit holds an unconsumed request.
MulUnitState tick(const MulUnitState& unit, const std::optional<MulRequest>& issue,
                  bool consumer_ready);

}  // namespace vercore::mul
