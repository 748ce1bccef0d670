#include "vercore/cosim.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "vercore/error.hpp"

namespace vercore::cosim {

namespace {

std::optional<MismatchKind> first_difference(const CommitRecord& e, const CommitRecord& a,
                                             const CompareOptions& opts) {
  if (e.reg_write != a.reg_write) return MismatchKind::RegisterWrite;
  if (e.reg_write && (e.rd != a.rd || e.wb_value != a.wb_value)) return MismatchKind::RegisterWrite;
  if (e.mem.has_value() != a.mem.has_value()) return MismatchKind::MemoryTxn;
  if (e.mem) {
    const MemTxn& x = *e.mem;
    const MemTxn& y = *a.mem;
    if (x.kind != y.kind) return MismatchKind::MemoryTxn;
    const bool check = x.kind == MemTxn::Kind::Store || opts.compare_loads;
    if (check && (x.addr != y.addr || x.data != y.data || x.width != y.width))
      return MismatchKind::MemoryTxn;
  }
  if (opts.strict_pc && (e.pc != a.pc || e.instr != a.instr)) return MismatchKind::ProgramCounter;
  return std::nullopt;
}

bool same_halt(const HaltCause& g, const HaltCause& p) {
  return g.kind == p.kind && g.code == p.code && g.pc == p.pc && g.error == p.error;
}

bool is_failure_halt(HaltCause::Kind k) {
  return k == HaltCause::Kind::Error || k == HaltCause::Kind::MaxSteps ||
         k == HaltCause::Kind::MaxCycles;
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

std::string_view mismatch_kind_name(MismatchKind k) {
  switch (k) {
    case MismatchKind::RegisterWrite: return "register-write";
    case MismatchKind::MemoryTxn: return "memory-txn";
    case MismatchKind::ProgramCounter: return "pc";
    case MismatchKind::MissingCommit: return "missing-write";
    case MismatchKind::ExtraCommit: return "extra-commit";
    case MismatchKind::Halt: return "halt";
  }
  return "unknown";
}

std::optional<Mismatch> compare_traces(const std::vector<CommitRecord>& expected,
                                       const std::vector<CommitRecord>& actual,
                                       const CompareOptions& opts) {
  std::size_t writes = 0;
  const std::size_t n = std::min(expected.size(), actual.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto kind = first_difference(expected[i], actual[i], opts)) {
      Mismatch m;
      m.kind = *kind;
      m.index = i;
      m.write_index = writes;
      m.expected = expected[i];
      m.actual = actual[i];
      m.pc = actual[i].pc;
      return m;
    }
    if (expected[i].reg_write) ++writes;
  }
  if (expected.size() == actual.size()) return std::nullopt;

  Mismatch m;
  m.index = n;
  m.write_index = writes;
  if (actual.size() < expected.size()) {
    m.kind = MismatchKind::MissingCommit;
    m.expected = expected[n];
    m.pc = expected[n].pc;
  } else {
    m.kind = MismatchKind::ExtraCommit;
    m.actual = actual[n];
    m.pc = actual[n].pc;
  }
  return m;
}

CpiReport cpi(std::uint64_t retired, std::uint64_t cycles) {
  if (retired == 0) throw Error(Errc::ZeroRetired, "CPI undefined: no instructions retired");
  CpiReport r;
  r.retired = retired;
  r.cycles = cycles;
  r.cpi = static_cast<double>(cycles) / static_cast<double>(retired);
  return r;
}

CpiReport cpi(const pipeline::CoreRunResult& run) {
  CpiReport r = cpi(run.commits.size(), run.cycles);
  std::uint64_t prev = kPipelineFill;
  std::uint64_t charged = 0;
  for (std::size_t i = 0; i < run.commits.size(); ++i) {
    const std::uint64_t at = run.commit_cycles[i];
    const std::uint64_t delta = at > prev ? at - prev : 0;
    r.per_pc[run.commits[i].pc] += delta;
    charged += delta;
    prev = at;
  }
  r.fill_cycles = run.cycles - charged;
  return r;
}

std::map<std::uint32_t, std::uint64_t> fetch_cycles_per_pc(
    const std::vector<pipeline::CycleSignals>& log) {
  std::map<std::uint32_t, std::uint64_t> out;
  for (const auto& s : log)
    if (s.reset_n && s.bus.ic_valid) ++out[s.pc_f];
  return out;
}

Verdict lockstep(const MemoryImage& image, std::uint32_t entry, const LockstepConfig& cfg) {
  Verdict v;
  pipeline::CoreConfig core_cfg = cfg.core;
  core_cfg.reset_pc = entry;

  ArchState gs;
  gs.pc = entry;
  gs.mem = image;
  RunResult golden;
  pipeline::CoreRunResult piped;
  try {
    golden = run(gs, cfg.max_steps);
    MemoryImage pm = image;
    pipeline::CoreState core = pipeline::make_core(core_cfg);
    piped = pipeline::run_core(core, pm, core_cfg, cfg.max_cycles);
  } catch (const Error& e) {
    v.failure = std::string("simulator error: ") + e.what();
    return v;
  }

  v.golden_halt = golden.halt;
  v.pipeline_halt = piped.halt;
  v.retired = piped.commits.size();
  v.cycles = piped.cycles;
  v.stats = piped.stats;
  if (v.retired > 0) v.cpi = cpi(piped);

  v.mismatch = compare_traces(golden.trace, piped.commits, cfg.compare);
  if (!v.mismatch && !same_halt(golden.halt, piped.halt)) {
    Mismatch m;
    m.kind = MismatchKind::Halt;
    m.index = golden.trace.size();
    m.write_index = static_cast<std::size_t>(
        std::count_if(golden.trace.begin(), golden.trace.end(),
                      [](const CommitRecord& c) { return c.reg_write; }));
    m.pc = piped.halt.pc;
    v.mismatch = m;
  }

  const bool capped = golden.halt.kind == HaltCause::Kind::MaxSteps ||
                      piped.halt.kind == HaltCause::Kind::MaxCycles;
  if (capped && v.mismatch &&
      (v.mismatch->kind == MismatchKind::MissingCommit || v.mismatch->kind == MismatchKind::ExtraCommit ||
       v.mismatch->kind == MismatchKind::Halt))
    v.mismatch.reset();

  if (v.mismatch) {
    Mismatch& m = *v.mismatch;
    m.cycle = m.index < piped.commit_cycles.size() ? piped.commit_cycles[m.index] : piped.cycles;
    v.context_begin = m.index > cfg.context ? m.index - cfg.context : 0;
    const std::size_t end = m.index + cfg.context + 1;
    for (std::size_t i = v.context_begin; i < std::min(end, golden.trace.size()); ++i)
      v.expected_context.push_back(golden.trace[i]);
    for (std::size_t i = v.context_begin; i < std::min(end, piped.commits.size()); ++i)
      v.actual_context.push_back(piped.commits[i]);

    // Replay deterministically with signal capture up to just past the failure.
    constexpr std::uint64_t kWindow = 8;
    MemoryImage pm = image;
    pipeline::CoreState core = pipeline::make_core(core_cfg);
    const auto replay = pipeline::run_core(core, pm, core_cfg,
                                           std::min(cfg.max_cycles, m.cycle + kWindow), true);
    const std::uint64_t lo = m.cycle > kWindow ? m.cycle - kWindow : 0;
    for (const auto& s : replay.signal_log)
      if (s.cycle >= lo && s.cycle <= m.cycle + kWindow) v.signals_near.push_back(s);
    return v;
  }

  if (is_failure_halt(golden.halt.kind)) {
    v.failure = "golden model: " + describe(golden.halt);
  } else if (is_failure_halt(piped.halt.kind)) {
    v.failure = "pipeline: " + describe(piped.halt);
  }
  v.pass = v.failure.empty();
  return v;
}

std::string format_verdict(const Verdict& v) {
  std::ostringstream out;
  if (v.pass) {
    out << "RESULT: PASS halt=" << describe(v.pipeline_halt) << " retired=" << v.retired
        << " cycles=" << v.cycles << '\n';
  } else if (!v.mismatch) {
    out << "RESULT: FAIL " << v.failure << '\n';
  } else {
    const Mismatch& m = *v.mismatch;
    out << "RESULT: FAIL first mismatch at commit " << m.index << '\n';
    out << "MISMATCH: kind=" << mismatch_kind_name(m.kind) << " commit=" << m.index
        << " write=" << m.write_index << " cycle=" << m.cycle << " pc=" << hex(m.pc) << '\n';
    out << "  expected: " << (m.expected ? format_commit(*m.expected) : std::string("<none>"))
        << '\n';
    out << "  actual:   " << (m.actual ? format_commit(*m.actual) : std::string("<none>")) << '\n';
    if (m.kind == MismatchKind::Halt) {
      out << "  golden halt:   " << describe(v.golden_halt) << '\n';
      out << "  pipeline halt: " << describe(v.pipeline_halt) << '\n';
    }
    const std::size_t rows = std::max(v.expected_context.size(), v.actual_context.size());
    if (rows > 0) out << "  context:\n";
    for (std::size_t k = 0; k < rows; ++k) {
      char idx[32];
      std::snprintf(idx, sizeof idx, "  %c[%5zu] ", v.context_begin + k == m.index ? '>' : ' ',
                    v.context_begin + k);
      out << idx
          << (k < v.expected_context.size() ? format_commit(v.expected_context[k]) : "-")
          << "  |  "
          << (k < v.actual_context.size() ? format_commit(v.actual_context[k]) : "-") << '\n';
    }
  }
  if (v.cpi) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "CPI: %.4f cycles=%llu retired=%llu\n", v.cpi->cpi,
                  static_cast<unsigned long long>(v.cpi->cycles),
                  static_cast<unsigned long long>(v.cpi->retired));
    out << buf;
  }
  return out.str();
}

}  // namespace vercore::cosim
