#pragma once

// Waveform tooling: VCD emission from pipeline signal logs, a VCD parser,
// VCD -> CSV tabulation and a register-write diff against reg_trace.hex.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vercore/pipeline.hpp"

namespace vercore::trace {

struct SignalDecl {
  std::string id_code;
  unsigned width = 1;
  std::string name;  // dotted hierarchy, optional "[msb:lsb]" suffix

  bool operator==(const SignalDecl&) const = default;
};

/// Bit string, most significant bit first, over the alphabet 0 1 x z.
using BitVec = std::string;

struct ValueChange {
  std::uint64_t time = 0;
  std::string id_code;
  BitVec value;

  bool operator==(const ValueChange&) const = default;
};

/// Sampled values of every declared signal at one timestamp.
struct Frame {
  std::uint64_t time = 0;
  std::vector<BitVec> values;  // indexed like Timeline::decls
};

struct Timeline {
  std::vector<SignalDecl> decls;
  std::vector<Frame> frames;  // strictly increasing time
};

struct VcdOptions {
  std::string timescale = "1ps";
  std::string version = "vercore";
};

inline constexpr std::uint64_t kUnitsPerCycle = 10000;

BitVec to_bits(std::uint64_t value, unsigned width);

/// Short printable identifier for the n-th declaration ("!", "\"", ... "!!").
std::string id_code_for(std::size_t n);

/// Names and widths of the dumped core signals, in declaration order.
std::vector<SignalDecl> core_signal_decls();

/// One frame per logged cycle at time = cycle * units_per_cycle.
Timeline core_timeline(const std::vector<pipeline::CycleSignals>& log,
                       std::uint64_t units_per_cycle = kUnitsPerCycle);

/// Writes header, $dumpvars with the first frame (all x for an empty
/// timeline) and then only the values that change. Throws
/// Error{SinkWriteFailure} when the stream goes bad.
void vcd_write(std::ostream& out, const Timeline& tl, const VcdOptions& opts = {});

struct VcdData {
  std::vector<SignalDecl> decls;
  std::vector<ValueChange> changes;
  std::string timescale;
};

/// Throws Error{MalformedVcd} with the 1-based line of the offending token.
VcdData vcd_parse(std::istream& in);
VcdData vcd_parse_string(std::string_view text);

/// Rebuilds the sampled timeline (one frame per distinct timestamp).
Timeline to_timeline(const VcdData& vcd);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by exact header name, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Single-bit cells are 0/1/x/z; wider cells are fixed-width lowercase hex
/// with x (or z) in any digit covering an unknown bit.
std::string render_cell(const BitVec& v);

CsvTable vcd_to_csv(const VcdData& vcd);

void write_csv(std::ostream& out, const CsvTable& t);
/// Throws Error{MissingColumn} when a row is shorter than the header.
CsvTable read_csv(std::istream& in);

struct DiffColumns {
  std::string reg_write = "vercore_tb.u_vercore.wb_reg_write";
  std::string rd = "vercore_tb.u_vercore.wb_rd[4:0]";
  std::string data = "vercore_tb.u_vercore.wb_data[31:0]";
  std::string pc = "vercore_tb.u_vercore.u_stage_if.pc[31:0]";  // optional column
  std::string time = "time";
};

struct ExpectedWrite {
  unsigned rd = 0;
  std::uint32_t value = 0;
};

struct ActualWrite {
  std::string time;
  std::optional<unsigned> rd;         // nullopt when the cell holds x/z
  std::optional<std::uint32_t> value;
  std::optional<std::uint32_t> pc;
};

/// Parses reg_trace.hex text. Blank lines are skipped; any other line must be
/// exactly ten hex digits. Throws Error{MalformedTraceLine}.
std::vector<ExpectedWrite> parse_reg_trace(std::string_view text);

struct DiffReport {
  enum class Outcome { Match, Mismatch, MissingWrite };
  Outcome outcome = Outcome::Match;
  std::size_t index = 0;  // write ordinal of the mismatch or the first missing write
  std::vector<ExpectedWrite> expected;
  std::vector<ActualWrite> actual;
  std::string text;

  bool ok() const { return outcome == Outcome::Match; }
};

/// Compares register writes found in `table` (rows with reg_write == 1 and
/// rd != 0, in row order) against `expected`. Throws Error{MissingColumn}.
DiffReport diff_reg_trace(const CsvTable& table, const std::vector<ExpectedWrite>& expected,
                          const DiffColumns& cols = {});

}  // namespace vercore::trace
