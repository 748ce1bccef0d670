#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "vercore/cosim.hpp"
#include "vercore/golden.hpp"
#include "vercore/memory.hpp"
#include "vercore/mul.hpp"
#include "vercore/pipeline.hpp"
#include "vercore/trace.hpp"

using namespace vercore;

namespace {

const LoadedProgram& bench_program() {
  static const LoadedProgram p =
      load_program_file(std::string(VERCORE_FIXTURE_DIR) + "/bench.elf", ProgramFormat::Elf, 0);
  return p;
}

void BM_MulResult(benchmark::State& state) {
  std::mt19937 rng(1);
  const auto op = static_cast<mul::MulOp>(state.range(0));
  for (auto _ : state) {
    const mul::MulRequest req{op, static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng())};
    benchmark::DoNotOptimize(mul::mul_result(req));
  }
}
BENCHMARK(BM_MulResult)->DenseRange(0, 3);

void BM_MulUnitRoundTrip(benchmark::State& state) {
  mul::MulUnitState u = mul::make_unit(static_cast<unsigned>(state.range(0)));
  std::uint32_t a = 0x12345678;
  for (auto _ : state) {
    u = mul::tick(u, mul::MulRequest{mul::MulOp::Mul, a, 0x9abcdef0}, true);
    while (!u.out_valid) u = mul::tick(u, std::nullopt, true);
    a = u.result;
    u = mul::tick(u, std::nullopt, true);
  }
  benchmark::DoNotOptimize(a);
}
BENCHMARK(BM_MulUnitRoundTrip)->Arg(1)->Arg(4);

void BM_GoldenBench(benchmark::State& state) {
  const LoadedProgram& p = bench_program();
  std::uint64_t retired = 0;
  for (auto _ : state) {
    ArchState s;
    s.pc = p.entry;
    s.mem = p.image;
    retired += run(s, 1'000'000).trace.size();
  }
  state.counters["instr/s"] = benchmark::Counter(static_cast<double>(retired), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_GoldenBench)->Unit(benchmark::kMillisecond);

void BM_PipelineBench(benchmark::State& state) {
  const LoadedProgram& p = bench_program();
  pipeline::CoreConfig cfg;
  cfg.reset_pc = p.entry;
  std::uint64_t cycles = 0;
  for (auto _ : state) {
    pipeline::CoreState core = pipeline::make_core(cfg);
    MemoryImage mem = p.image;
    cycles += pipeline::run_core(core, mem, cfg, 1'000'000, state.range(0) != 0).cycles;
  }
  state.counters["cycles/s"] = benchmark::Counter(static_cast<double>(cycles), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_PipelineBench)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Lockstep(benchmark::State& state) {
  const LoadedProgram& p = bench_program();
  for (auto _ : state) benchmark::DoNotOptimize(cosim::lockstep(p.image, p.entry, {}).pass);
}
BENCHMARK(BM_Lockstep)->Unit(benchmark::kMillisecond);

const std::string& bench_vcd() {
  static const std::string text = [] {
    const LoadedProgram& p = bench_program();
    pipeline::CoreConfig cfg;
    cfg.reset_pc = p.entry;
    pipeline::CoreState core = pipeline::make_core(cfg);
    MemoryImage mem = p.image;
    std::ostringstream out;
    trace::vcd_write(out, trace::core_timeline(pipeline::run_core(core, mem, cfg, 1'000'000, true).signal_log));
    return out.str();
  }();
  return text;
}

void BM_VcdWrite(benchmark::State& state) {
  const LoadedProgram& p = bench_program();
  pipeline::CoreConfig cfg;
  cfg.reset_pc = p.entry;
  pipeline::CoreState core = pipeline::make_core(cfg);
  MemoryImage mem = p.image;
  const trace::Timeline tl = trace::core_timeline(pipeline::run_core(core, mem, cfg, 1'000'000, true).signal_log);
  for (auto _ : state) {
    std::ostringstream out;
    trace::vcd_write(out, tl);
    state.SetBytesProcessed(state.bytes_processed() + static_cast<std::int64_t>(out.tellp()));
  }
}
BENCHMARK(BM_VcdWrite)->Unit(benchmark::kMillisecond);

void BM_VcdParseToCsv(benchmark::State& state) {
  const std::string& text = bench_vcd();
  for (auto _ : state) benchmark::DoNotOptimize(trace::vcd_to_csv(trace::vcd_parse_string(text)).rows.size());
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_VcdParseToCsv)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
