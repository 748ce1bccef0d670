#include "vercore/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "vercore/cosim.hpp"
#include "vercore/error.hpp"
#include "vercore/golden.hpp"
#include "vercore/memory.hpp"
#include "vercore/pipeline.hpp"
#include "vercore/trace.hpp"

namespace vercore::cli {

namespace {

struct LoadOptions {
  std::string format = "auto";
  std::string base = "0x2000";
  std::string reset_pc;
  std::string tohost;
};

struct SimOptions {
  std::string max_steps = "20000000";
  std::string max_cycles = "50000000";
  unsigned mul_latency = mul::kDefaultLatency;
  std::vector<std::string> faults;
};

/// Thrown for bad flag values that CLI11 cannot validate on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t parse_number(const std::string& flag, const std::string& text) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used, 0);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("invalid value for " + flag + ": '" + text + "'");
}

std::uint32_t parse_address(const std::string& flag, const std::string& text) {
  const std::uint64_t v = parse_number(flag, text);
  if (v > 0xffffffffull) throw UsageError(flag + " does not fit in 32 bits: " + text);
  return static_cast<std::uint32_t>(v);
}

std::uint64_t parse_count(const std::string& flag, const std::string& text) {
  const std::uint64_t v = parse_number(flag, text);
  if (v == 0) throw UsageError(flag + " must be positive");
  return v;
}

ProgramFormat parse_format(const std::string& s) {
  if (s == "auto") return ProgramFormat::Auto;
  if (s == "elf") return ProgramFormat::Elf;
  if (s == "hex") return ProgramFormat::Hex;
  if (s == "bin") return ProgramFormat::Bin;
  throw UsageError("unknown program format '" + s + "' (expected auto, elf, hex or bin)");
}

LoadedProgram load(const std::string& path, const LoadOptions& o) {
  const ProgramFormat fmt = parse_format(o.format);
  const std::uint32_t base = parse_address("--base", o.base);
  std::optional<std::uint32_t> reset;
  if (!o.reset_pc.empty()) reset = parse_address("--reset-pc", o.reset_pc);
  std::optional<std::uint32_t> tohost;
  if (!o.tohost.empty()) tohost = parse_address("--tohost", o.tohost);

  LoadedProgram p = load_program_file(path, fmt, base);
  if (reset) p.entry = *reset;
  if (!p.image.tohost_addr() && tohost) p.image.set_tohost_addr(tohost);
  return p;
}

pipeline::CoreConfig core_config(const SimOptions& s, std::uint32_t entry) {
  pipeline::CoreConfig cfg;
  cfg.reset_pc = entry;
  if (s.mul_latency == 0) throw UsageError("--mul-latency must be at least 1");
  cfg.mul_latency = s.mul_latency;
  for (const auto& f : s.faults) {
    if (f == "ifid-flush")
      cfg.faults.disable_ifid_flush = true;
    else if (f == "store-forwarding")
      cfg.faults.disable_store_data_forwarding = true;
    else
      throw UsageError("unknown fault '" + f + "' (expected ifid-flush or store-forwarding)");
  }
  return cfg;
}

template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  fn(out);
  out.flush();
  if (!out) throw Error(Errc::SinkWriteFailure, "write to " + path + " failed");
}

std::string read_text(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

bool is_clean_halt(const HaltCause& h) {
  return h.kind == HaltCause::Kind::Ecall || h.kind == HaltCause::Kind::Ebreak ||
         h.kind == HaltCause::Kind::TohostStore;
}

int halt_status(const HaltCause& h) {
  if (!is_clean_halt(h)) return kSimulationError;
  return h.code == 0 ? kOk : kMismatch;
}

void print_halt(std::ostream& out, std::ostream& err, const HaltCause& h) {
  out << "HALT: " << describe(h) << '\n';
  if (h.kind == HaltCause::Kind::Error) err << "error: " << h.message << '\n';
}

std::string fmt_cpi(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

int cmd_run(const std::string& path, const LoadOptions& lo, const SimOptions& so,
            const std::string& trace_out, const std::string& reg_trace_out, std::ostream& out,
            std::ostream& err) {
  LoadedProgram p = load(path, lo);
  ArchState s;
  s.pc = p.entry;
  s.mem = std::move(p.image);
  const RunResult r = vercore::run(s, parse_count("--max-steps", so.max_steps));
  if (!trace_out.empty()) write_file(trace_out, [&](std::ostream& o) { write_commit_trace(o, r.trace); });
  if (!reg_trace_out.empty())
    write_file(reg_trace_out, [&](std::ostream& o) { write_reg_trace(o, r.trace); });
  print_halt(out, err, r.halt);
  out << "RETIRED: " << r.trace.size() << '\n';
  return halt_status(r.halt);
}

void dump_vcd(const std::string& path, const std::vector<pipeline::CycleSignals>& log) {
  write_file(path, [&](std::ostream& o) { trace::vcd_write(o, trace::core_timeline(log)); });
}

int cmd_sim(const std::string& path, const LoadOptions& lo, const SimOptions& so,
            const std::string& vcd, const std::string& trace_out, const std::string& reg_trace_out,
            std::ostream& out, std::ostream& err) {
  LoadedProgram p = load(path, lo);
  const pipeline::CoreConfig cfg = core_config(so, p.entry);
  pipeline::CoreState core = pipeline::make_core(cfg);
  const auto r = pipeline::run_core(core, p.image, cfg, parse_count("--max-cycles", so.max_cycles), !vcd.empty());
  if (!vcd.empty()) dump_vcd(vcd, r.signal_log);
  if (!trace_out.empty()) write_file(trace_out, [&](std::ostream& o) { write_commit_trace(o, r.commits); });
  if (!reg_trace_out.empty())
    write_file(reg_trace_out, [&](std::ostream& o) { write_reg_trace(o, r.commits); });
  print_halt(out, err, r.halt);
  out << "RETIRED: " << r.commits.size() << '\n' << "CYCLES: " << r.cycles << '\n';
  if (!r.commits.empty()) out << "CPI: " << fmt_cpi(cosim::cpi(r.commits.size(), r.cycles).cpi) << '\n';
  out << "STALLS: load-use=" << r.stats.load_use_stalls << " mul=" << r.stats.global_stall_cycles
      << " flushes=" << r.stats.flushes << '\n';
  return halt_status(r.halt);
}

cosim::LockstepConfig lockstep_config(const SimOptions& so, std::uint32_t entry, bool strict_pc,
                                      bool relax_loads) {
  cosim::LockstepConfig cfg;
  cfg.core = core_config(so, entry);
  cfg.max_cycles = parse_count("--max-cycles", so.max_cycles);
  cfg.max_steps = parse_count("--max-steps", so.max_steps);
  cfg.compare.strict_pc = strict_pc;
  cfg.compare.compare_loads = !relax_loads;
  return cfg;
}

int verdict_status(const cosim::Verdict& v, std::optional<double> cpi_bound) {
  if (v.mismatch) return kMismatch;
  if (!v.pass) return kSimulationError;
  if (cpi_bound && (!v.cpi || v.cpi->cpi > *cpi_bound)) return kMismatch;
  return kOk;
}

int cmd_cosim(const std::string& path, const LoadOptions& lo, const SimOptions& so, bool strict_pc,
              bool relax_loads, std::optional<double> cpi_bound, const std::string& vcd,
              std::ostream& out, std::ostream& err) {
  const LoadedProgram p = load(path, lo);
  const auto cfg = lockstep_config(so, p.entry, strict_pc, relax_loads);
  const cosim::Verdict v = cosim::lockstep(p.image, p.entry, cfg);
  out << cosim::format_verdict(v);
  if (!vcd.empty()) {
    pipeline::CoreState core = pipeline::make_core(cfg.core);
    MemoryImage mem = p.image;
    dump_vcd(vcd, pipeline::run_core(core, mem, cfg.core, cfg.max_cycles, true).signal_log);
  }
  const int status = verdict_status(v, cpi_bound);
  if (!v.failure.empty()) err << "error: " << v.failure << '\n';
  if (v.pass && status == kMismatch)
    out << "CPI BOUND EXCEEDED: " << (v.cpi ? fmt_cpi(v.cpi->cpi) : "n/a") << " > "
        << fmt_cpi(*cpi_bound) << '\n';
  return status;
}

int cmd_vcd2csv(const std::string& vcd_path, const std::string& csv_path, std::ostream& out) {
  std::ifstream in(vcd_path);
  if (!in) throw Error(Errc::IoError, "cannot open " + vcd_path);
  const trace::CsvTable t = trace::vcd_to_csv(trace::vcd_parse(in));
  write_file(csv_path, [&](std::ostream& o) { trace::write_csv(o, t); });
  out << "wrote " << t.rows.size() << " rows x " << t.header.size() << " columns to " << csv_path << '\n';
  return kOk;
}

int cmd_diff(const std::string& csv_path, const std::string& reg_path, const trace::DiffColumns& cols,
             std::ostream& out) {
  std::ifstream in(csv_path);
  if (!in) throw Error(Errc::IoError, "cannot open " + csv_path);
  const trace::CsvTable t = trace::read_csv(in);
  const auto expected = trace::parse_reg_trace(read_text(reg_path));
  const auto rep = trace::diff_reg_trace(t, expected, cols);
  out << rep.text;
  return rep.ok() ? kOk : kMismatch;
}

struct BenchRow {
  std::string name;
  int status = kOk;
  std::string result;
  std::uint64_t retired = 0;
  std::uint64_t cycles = 0;
  std::optional<double> cpi;
  std::string detail;
};

BenchRow bench_one(const std::string& path, const LoadOptions& lo, const SimOptions& so, bool strict_pc,
                   bool relax_loads, std::optional<double> cpi_bound) {
  BenchRow row;
  row.name = path;
  try {
    const LoadedProgram p = load(path, lo);
    const cosim::Verdict v = cosim::lockstep(p.image, p.entry, lockstep_config(so, p.entry, strict_pc, relax_loads));
    row.retired = v.retired;
    row.cycles = v.cycles;
    if (v.cpi) row.cpi = v.cpi->cpi;
    row.status = verdict_status(v, cpi_bound);
    if (v.mismatch) {
      row.result = "mismatch";
      row.detail = std::string(cosim::mismatch_kind_name(v.mismatch->kind)) + " at commit " +
                   std::to_string(v.mismatch->index);
    } else if (!v.pass) {
      row.result = "error";
      row.detail = v.failure;
    } else {
      row.result = row.status == kOk ? "pass" : "cpi-bound";
    }
  } catch (const Error& e) {
    row.status = kInputError;
    row.result = "input-error";
    row.detail = e.what();
  }
  return row;
}

int cmd_bench(const std::vector<std::string>& programs, const LoadOptions& lo, const SimOptions& so,
              bool strict_pc, bool relax_loads, std::optional<double> cpi_bound, unsigned jobs,
              bool jsonl, std::ostream& out) {
  // Shared flags are validated up front on the calling thread.
  parse_format(lo.format);
  core_config(so, 0);
  lockstep_config(so, 0, strict_pc, relax_loads);

  std::vector<BenchRow> rows(programs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < programs.size();)
      rows[i] = bench_one(programs[i], lo, so, strict_pc, relax_loads, cpi_bound);
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(programs.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (jsonl) {
    for (const auto& r : rows) {
      nlohmann::json j{{"name", r.name},       {"result", r.result}, {"retired", r.retired},
                       {"cycles", r.cycles},   {"status", r.status}};
      j["cpi"] = r.cpi ? nlohmann::json(*r.cpi) : nlohmann::json(nullptr);
      if (!r.detail.empty()) j["detail"] = r.detail;
      out << j.dump() << '\n';
    }
  } else {
    std::size_t width = 7;
    for (const auto& r : rows) width = std::max(width, r.name.size());
    char buf[64];
    out << std::string("program") << std::string(width - 7, ' ') << "     retired      cycles     CPI  result\n";
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "  %10llu  %10llu  %6s  ", static_cast<unsigned long long>(r.retired),
                    static_cast<unsigned long long>(r.cycles), r.cpi ? fmt_cpi(*r.cpi).c_str() : "-");
      out << r.name << std::string(width - r.name.size(), ' ') << buf << r.result;
      if (!r.detail.empty()) out << " (" << r.detail << ')';
      out << '\n';
    }
  }

  int status = kOk;
  for (const auto& r : rows) {
    if (r.status == kInputError) return kInputError;
    if (r.status == kSimulationError) status = kSimulationError;
    else if (r.status == kMismatch && status == kOk) status = kMismatch;
  }
  return status;
}

void add_load_options(CLI::App* cmd, LoadOptions& o) {
  cmd->add_option("--format", o.format, "Program format: auto, elf, hex or bin")->capture_default_str();
  cmd->add_option("--base", o.base, "Load address and entry for hex/bin programs")->capture_default_str();
  cmd->add_option("--reset-pc", o.reset_pc, "Override the entry point");
  cmd->add_option("--tohost", o.tohost, "tohost address used when the ELF has no tohost symbol");
}

void add_sim_options(CLI::App* cmd, SimOptions& o, bool pipeline, bool golden) {
  if (golden) cmd->add_option("--max-steps", o.max_steps, "Golden-model instruction cap")->capture_default_str();
  if (!pipeline) return;
  cmd->add_option("--max-cycles", o.max_cycles, "Pipeline cycle cap")->capture_default_str();
  cmd->add_option("--mul-latency", o.mul_latency, "Multiplier latency in cycles")->capture_default_str();
  cmd->add_option("--inject-fault", o.faults, "Test-only pipeline fault: ifid-flush or store-forwarding");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"VerCore RV32IM pipeline simulator, co-simulation harness and trace tools", "vercore"};
  app.require_subcommand(1);

  LoadOptions lo;
  SimOptions so;
  std::string program, trace_out, reg_trace_out, vcd, vcd_in, csv, reg_trace;
  std::vector<std::string> programs;
  bool strict_pc = false, relax_loads = false, jsonl = false;
  std::optional<double> cpi_bound;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  trace::DiffColumns cols;

  auto* run_cmd = app.add_subcommand("run", "Run the golden instruction-level model");
  run_cmd->add_option("program", program, "ELF, hex or binary program")->required();
  add_load_options(run_cmd, lo);
  add_sim_options(run_cmd, so, false, true);
  run_cmd->add_option("--trace-out", trace_out, "Write the commit trace");
  run_cmd->add_option("--reg-trace-out", reg_trace_out, "Write reg_trace.hex");

  auto* sim_cmd = app.add_subcommand("sim", "Run the cycle-accurate pipeline only");
  sim_cmd->add_option("program", program, "ELF, hex or binary program")->required();
  add_load_options(sim_cmd, lo);
  add_sim_options(sim_cmd, so, true, false);
  sim_cmd->add_option("--vcd", vcd, "Write a VCD waveform of the run");
  sim_cmd->add_option("--trace-out", trace_out, "Write the commit trace");
  sim_cmd->add_option("--reg-trace-out", reg_trace_out, "Write reg_trace.hex");

  auto* cosim_cmd = app.add_subcommand("cosim", "Lockstep-compare the pipeline against the golden model");
  cosim_cmd->add_option("program", program, "ELF, hex or binary program")->required();
  add_load_options(cosim_cmd, lo);
  add_sim_options(cosim_cmd, so, true, true);
  cosim_cmd->add_flag("--strict-pc", strict_pc, "Also compare pc and instruction word of every commit");
  cosim_cmd->add_flag("--relax-loads", relax_loads, "Do not compare load addresses and data");
  cosim_cmd->add_option("--cpi-bound", cpi_bound, "Fail when the measured CPI exceeds this value");
  cosim_cmd->add_option("--vcd", vcd, "Write a VCD waveform of the pipeline run");

  auto* vcd_cmd = app.add_subcommand("vcd2csv", "Tabulate a VCD file as CSV, one row per timestamp");
  vcd_cmd->add_option("vcd", vcd_in, "Input VCD")->required();
  vcd_cmd->add_option("csv", csv, "Output CSV")->required();

  auto* diff_cmd = app.add_subcommand("diff-trace", "Compare CSV register writes against reg_trace.hex");
  diff_cmd->add_option("csv", csv, "CSV produced by vcd2csv")->required();
  diff_cmd->add_option("reg_trace", reg_trace, "Expected reg_trace.hex")->required();
  diff_cmd->add_option("--we-column", cols.reg_write, "Write-enable column")->capture_default_str();
  diff_cmd->add_option("--rd-column", cols.rd, "Destination register column")->capture_default_str();
  diff_cmd->add_option("--data-column", cols.data, "Write data column")->capture_default_str();
  diff_cmd->add_option("--pc-column", cols.pc, "Optional pc column")->capture_default_str();

  auto* bench_cmd = app.add_subcommand("bench", "Co-simulate a list of programs and tabulate CPI");
  bench_cmd->add_option("programs", programs, "Programs to run")->required();
  add_load_options(bench_cmd, lo);
  add_sim_options(bench_cmd, so, true, true);
  bench_cmd->add_flag("--strict-pc", strict_pc, "Also compare pc and instruction word of every commit");
  bench_cmd->add_flag("--relax-loads", relax_loads, "Do not compare load addresses and data");
  bench_cmd->add_option("--cpi-bound", cpi_bound, "Fail programs whose CPI exceeds this value");
  bench_cmd->add_option("-j,--jobs", jobs, "Worker threads")->capture_default_str();
  bench_cmd->add_flag("--jsonl", jsonl, "One JSON object per program instead of a table");

  std::vector<const char*> argv{"vercore"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(program, lo, so, trace_out, reg_trace_out, out, err);
    if (*sim_cmd) return cmd_sim(program, lo, so, vcd, trace_out, reg_trace_out, out, err);
    if (*cosim_cmd) return cmd_cosim(program, lo, so, strict_pc, relax_loads, cpi_bound, vcd, out, err);
    if (*vcd_cmd) return cmd_vcd2csv(vcd_in, csv, out);
    if (*diff_cmd) return cmd_diff(csv, reg_trace, cols, out);
    if (*bench_cmd) return cmd_bench(programs, lo, so, strict_pc, relax_loads, cpi_bound, jobs, jsonl, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << errc_name(e.code()) << ": " << e.what() << '\n';
    switch (e.code()) {
      case Errc::IllegalInstruction:
      case Errc::MisalignedAccess:
      case Errc::MisalignedFetch:
      case Errc::FetchFromUninitializedMemory:
      case Errc::IssueWhileBusy:
      case Errc::ZeroRetired:
        return kSimulationError;
      default:
        return kInputError;
    }
  }
  return kUsage;
}

}  // namespace vercore::cli
