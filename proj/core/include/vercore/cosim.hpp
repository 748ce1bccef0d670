#pragma once

// Lockstep comparison of the pipeline against the golden model, plus CPI and
// per-PC cycle accounting.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vercore/golden.hpp"
#include "vercore/pipeline.hpp"

namespace vercore::cosim {

struct CompareOptions {
  bool strict_pc = false;     // also compare pc and instruction word
  bool compare_loads = true;  // false: loads only need to agree on kind
};

enum class MismatchKind : std::uint8_t {
  RegisterWrite,
  MemoryTxn,
  ProgramCounter,
  MissingCommit,  // actual trace ended early
  ExtraCommit,    // actual trace continued past the expected end
  Halt,           // traces agree but the simulators stopped differently
};

std::string_view mismatch_kind_name(MismatchKind k);

struct Mismatch {
  MismatchKind kind = MismatchKind::RegisterWrite;
  std::size_t index = 0;        // commit ordinal
  std::size_t write_index = 0;  // ordinal among expected register writes
  std::optional<CommitRecord> expected;
  std::optional<CommitRecord> actual;
  std::uint64_t cycle = 0;  // pipeline cycle of the actual commit (or of the end of the run)
  std::uint32_t pc = 0;
};

/// First divergence between two commit streams, or nullopt. `cycle` is left 0.
std::optional<Mismatch> compare_traces(const std::vector<CommitRecord>& expected,
                                       const std::vector<CommitRecord>& actual,
                                       const CompareOptions& opts = {});

struct CpiReport {
  std::uint64_t cycles = 0;
  std::uint64_t retired = 0;
  double cpi = 0.0;
  // Cycles attributed per pc: each commit is charged the cycles since the
  // previous commit; the first commit is not charged the pipeline fill.
  std::map<std::uint32_t, std::uint64_t> per_pc;
  std::uint64_t fill_cycles = 0;
};

inline constexpr std::uint64_t kPipelineFill = 4;

/// Throws Error{ZeroRetired} when `retired` is 0.
CpiReport cpi(std::uint64_t retired, std::uint64_t cycles);
CpiReport cpi(const pipeline::CoreRunResult& run);

/// Fetch-side attribution from a signal log: every post-reset cycle with an
/// active fetch is charged to pc_f (a stalled pc is charged again for each
/// stall cycle). Cycles with fetch shut off are not charged.
std::map<std::uint32_t, std::uint64_t> fetch_cycles_per_pc(
    const std::vector<pipeline::CycleSignals>& log);

struct LockstepConfig {
  pipeline::CoreConfig core;
  std::uint64_t max_cycles = 50'000'000;
  std::uint64_t max_steps = 20'000'000;
  CompareOptions compare;
  std::size_t context = 5;
};

struct Verdict {
  bool pass = false;
  std::optional<Mismatch> mismatch;
  std::string failure;  // non-empty when the run failed for a reason other than a mismatch
  HaltCause golden_halt;
  HaltCause pipeline_halt;
  std::uint64_t retired = 0;
  std::uint64_t cycles = 0;
  std::optional<CpiReport> cpi;
  pipeline::CoreStats stats;

  // Populated on mismatch.
  std::size_t context_begin = 0;
  std::vector<CommitRecord> expected_context;
  std::vector<CommitRecord> actual_context;
  std::vector<pipeline::CycleSignals> signals_near;
};

/// Runs golden and pipeline from `entry` on separate copies of `image`.
/// cfg.core.reset_pc is replaced by `entry`.
Verdict lockstep(const MemoryImage& image, std::uint32_t entry, const LockstepConfig& cfg);

/// RESULT:/MISMATCH:/CPI: prefixed report lines followed by context.
std::string format_verdict(const Verdict& v);

}  // namespace vercore::cosim
