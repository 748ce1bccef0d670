#include "vercore/trace.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "vercore/error.hpp"

namespace vercore::trace {

namespace {

using Extract = std::function<std::uint64_t(const pipeline::CycleSignals&)>;

struct CoreSignal {
  const char* name;
  unsigned width;
  Extract get;
};

const std::vector<CoreSignal>& core_signals() {
  using S = pipeline::CycleSignals;
  static const std::vector<CoreSignal> table = {
      {"vercore_tb.u_vercore.rst_n", 1, [](const S& s) { return s.reset_n; }},
      {"vercore_tb.u_vercore.cycle[31:0]", 32, [](const S& s) { return s.cycle; }},
      {"vercore_tb.u_vercore.ic_va[31:0]", 32, [](const S& s) { return s.bus.ic_va; }},
      {"vercore_tb.u_vercore.ic_valid", 1, [](const S& s) { return s.bus.ic_valid; }},
      {"vercore_tb.u_vercore.ic_d_in[31:0]", 32, [](const S& s) { return s.bus.ic_d_in; }},
      {"vercore_tb.u_vercore.dc_va[31:0]", 32, [](const S& s) { return s.bus.dc_va; }},
      {"vercore_tb.u_vercore.dc_valid", 1, [](const S& s) { return s.bus.dc_valid; }},
      {"vercore_tb.u_vercore.dc_byte_en[3:0]", 4, [](const S& s) { return s.bus.dc_byte_en; }},
      {"vercore_tb.u_vercore.dc_d_out[31:0]", 32, [](const S& s) { return s.bus.dc_d_out; }},
      {"vercore_tb.u_vercore.dc_d_in[31:0]", 32, [](const S& s) { return s.bus.dc_d_in; }},
      {"vercore_tb.u_vercore.wb_rd[4:0]", 5, [](const S& s) { return s.wb_rd; }},
      {"vercore_tb.u_vercore.wb_reg_write", 1, [](const S& s) { return s.wb_reg_write; }},
      {"vercore_tb.u_vercore.wb_data[31:0]", 32, [](const S& s) { return s.wb_data; }},
      {"vercore_tb.u_vercore.branch_taken", 1, [](const S& s) { return s.branch_taken; }},
      {"vercore_tb.u_vercore.branch_target[31:0]", 32,
       [](const S& s) { return s.branch_target; }},
      {"vercore_tb.u_vercore.stall_pc", 1, [](const S& s) { return s.hazard.stall_pc; }},
      {"vercore_tb.u_vercore.stall_ifid", 1, [](const S& s) { return s.hazard.stall_ifid; }},
      {"vercore_tb.u_vercore.flush_ifid", 1, [](const S& s) { return s.hazard.flush_ifid; }},
      {"vercore_tb.u_vercore.bubble_idex", 1, [](const S& s) { return s.hazard.bubble_idex; }},
      {"vercore_tb.u_vercore.global_stall", 1, [](const S& s) { return s.hazard.global_stall; }},
      {"vercore_tb.u_vercore.u_stage_if.pc[31:0]", 32, [](const S& s) { return s.pc_f; }},
      {"vercore_tb.u_vercore.u_stage_id.valid", 1, [](const S& s) { return s.valid_id; }},
      {"vercore_tb.u_vercore.u_stage_id.pc[31:0]", 32, [](const S& s) { return s.pc_id; }},
      {"vercore_tb.u_vercore.u_stage_id.instr[31:0]", 32, [](const S& s) { return s.instr_id; }},
      {"vercore_tb.u_vercore.u_stage_ex.valid", 1, [](const S& s) { return s.valid_ex; }},
      {"vercore_tb.u_vercore.u_stage_ex.pc[31:0]", 32, [](const S& s) { return s.pc_ex; }},
      {"vercore_tb.u_vercore.u_stage_mem.valid", 1, [](const S& s) { return s.valid_mem; }},
      {"vercore_tb.u_vercore.u_stage_mem.pc[31:0]", 32, [](const S& s) { return s.pc_mem; }},
      {"vercore_tb.u_vercore.u_stage_wb.valid", 1, [](const S& s) { return s.valid_wb; }},
      {"vercore_tb.u_vercore.u_stage_wb.pc[31:0]", 32, [](const S& s) { return s.pc_wb; }},
      {"vercore_tb.u_vercore.u_mul.busy", 1, [](const S& s) { return s.mul_busy; }},
      {"vercore_tb.u_vercore.u_mul.out_valid", 1, [](const S& s) { return s.mul_out_valid; }},
      {"vercore_tb.u_vercore.u_mul.out_ready", 1, [](const S& s) { return s.mul_out_ready; }},
  };
  return table;
}

struct SplitName {
  std::vector<std::string> scopes;
  std::string ref;
  std::string range;  // "[msb:lsb]" or empty
};

SplitName split_name(const std::string& name) {
  SplitName out;
  std::string base = name;
  const auto bracket = name.find('[');
  if (bracket != std::string::npos) {
    base = name.substr(0, bracket);
    out.range = name.substr(bracket);
  }
  std::size_t start = 0;
  for (;;) {
    const auto dot = base.find('.', start);
    if (dot == std::string::npos) break;
    out.scopes.push_back(base.substr(start, dot - start));
    start = dot + 1;
  }
  out.ref = base.substr(start);
  return out;
}

void write_value(std::ostream& out, const BitVec& v, const std::string& id) {
  if (v.size() == 1)
    out << v << id << '\n';
  else
    out << 'b' << v << ' ' << id << '\n';
}

void check_sink(const std::ostream& out) {
  if (!out) throw Error(Errc::SinkWriteFailure, "VCD sink write failed");
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(Errc::MalformedVcd, "line " + std::to_string(line) + ": " + what, line);
}

class Tokenizer {
 public:
  explicit Tokenizer(std::string text) : text_(std::move(text)) {}

  bool next(std::string& tok, std::size_t& line) {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= text_.size()) return false;
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok.assign(text_, start, pos_ - start);
    line = line_;
    return true;
  }

  std::size_t line() const { return line_; }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

BitVec normalize_value(std::string raw, unsigned width, std::size_t line) {
  for (char& c : raw) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c != '0' && c != '1' && c != 'x' && c != 'z') malformed(line, "bad value digit in '" + raw + "'");
  }
  if (raw.empty()) malformed(line, "empty value");
  if (raw.size() > width)
    malformed(line, "value '" + raw + "' wider than declared " + std::to_string(width) + " bits");
  const char fill = (raw[0] == 'x' || raw[0] == 'z') ? raw[0] : '0';
  return std::string(width - raw.size(), fill) + raw;
}

std::optional<std::uint32_t> parse_hex_cell(const std::string& s) {
  if (s.empty() || s.size() > 8) return std::nullopt;
  std::uint32_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

BitVec to_bits(std::uint64_t value, unsigned width) {
  BitVec v(width, '0');
  for (unsigned i = 0; i < width && i < 64; ++i)
    if ((value >> i) & 1) v[width - 1 - i] = '1';
  return v;
}

std::string id_code_for(std::size_t n) {
  constexpr int kFirst = 33, kCount = 94;  // '!' .. '~'
  std::string id;
  do {
    id.push_back(static_cast<char>(kFirst + n % kCount));
    n /= kCount;
  } while (n-- > 0);
  return id;
}

std::vector<SignalDecl> core_signal_decls() {
  std::vector<SignalDecl> decls;
  const auto& table = core_signals();
  for (std::size_t i = 0; i < table.size(); ++i)
    decls.push_back({id_code_for(i), table[i].width, table[i].name});
  return decls;
}

Timeline core_timeline(const std::vector<pipeline::CycleSignals>& log,
                       std::uint64_t units_per_cycle) {
  Timeline tl;
  tl.decls = core_signal_decls();
  const auto& table = core_signals();
  tl.frames.reserve(log.size());
  for (const auto& s : log) {
    Frame f;
    f.time = s.cycle * units_per_cycle;
    f.values.reserve(table.size());
    for (const auto& sig : table) f.values.push_back(to_bits(sig.get(s), sig.width));
    tl.frames.push_back(std::move(f));
  }
  return tl;
}

void vcd_write(std::ostream& out, const Timeline& tl, const VcdOptions& opts) {
  out << "$version " << opts.version << " $end\n";
  out << "$timescale " << opts.timescale << " $end\n";

  std::vector<std::string> open;
  for (const SignalDecl& d : tl.decls) {
    const SplitName parts = split_name(d.name);
    std::size_t common = 0;
    while (common < open.size() && common < parts.scopes.size() &&
           open[common] == parts.scopes[common])
      ++common;
    while (open.size() > common) {
      out << "$upscope $end\n";
      open.pop_back();
    }
    for (std::size_t k = common; k < parts.scopes.size(); ++k) {
      out << "$scope module " << parts.scopes[k] << " $end\n";
      open.push_back(parts.scopes[k]);
    }
    out << "$var wire " << d.width << ' ' << d.id_code << ' ' << parts.ref;
    if (!parts.range.empty()) out << ' ' << parts.range;
    out << " $end\n";
  }
  while (!open.empty()) {
    out << "$upscope $end\n";
    open.pop_back();
  }
  out << "$enddefinitions $end\n";

  const std::uint64_t t0 = tl.frames.empty() ? 0 : tl.frames.front().time;
  out << '#' << t0 << "\n$dumpvars\n";
  for (std::size_t i = 0; i < tl.decls.size(); ++i) {
    const BitVec v = tl.frames.empty() ? BitVec(tl.decls[i].width, 'x') : tl.frames[0].values[i];
    write_value(out, v, tl.decls[i].id_code);
  }
  out << "$end\n";
  check_sink(out);

  for (std::size_t f = 1; f < tl.frames.size(); ++f) {
    const Frame& prev = tl.frames[f - 1];
    const Frame& cur = tl.frames[f];
    bool stamped = false;
    for (std::size_t i = 0; i < tl.decls.size(); ++i) {
      if (cur.values[i] == prev.values[i]) continue;
      if (!stamped) {
        out << '#' << cur.time << '\n';
        stamped = true;
      }
      write_value(out, cur.values[i], tl.decls[i].id_code);
    }
    check_sink(out);
  }
  out.flush();
  check_sink(out);
}

VcdData vcd_parse(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return vcd_parse_string(text);
}

VcdData vcd_parse_string(std::string_view text) {
  VcdData out;
  Tokenizer tz{std::string(text)};
  std::unordered_map<std::string, unsigned> widths;
  std::vector<std::string> scopes;
  std::uint64_t now = 0;
  bool in_dump = false;
  std::string tok;
  std::size_t line = 1;

  auto need = [&](const char* what) {
    if (!tz.next(tok, line)) malformed(tz.line(), std::string("unexpected end of file in ") + what);
    return tok;
  };
  auto until_end = [&](const char* what) {
    std::vector<std::string> body;
    for (;;) {
      std::string t = need(what);
      if (t == "$end") return body;
      body.push_back(std::move(t));
    }
  };
  auto add_change = [&](const std::string& id, std::string raw, std::size_t at) {
    const auto it = widths.find(id);
    if (it == widths.end()) malformed(at, "value change for undeclared id '" + id + "'");
    out.changes.push_back({now, id, normalize_value(std::move(raw), it->second, at)});
  };

  while (tz.next(tok, line)) {
    const std::size_t at = line;
    if (tok[0] == '$') {
      if (tok == "$end") {
        if (!in_dump) malformed(at, "stray $end");
        in_dump = false;
      } else if (tok == "$comment" || tok == "$date" || tok == "$version") {
        until_end(tok.c_str());
      } else if (tok == "$timescale") {
        const auto body = until_end("$timescale");
        out.timescale.clear();
        for (const auto& b : body) out.timescale += b;
      } else if (tok == "$scope") {
        const auto body = until_end("$scope");
        if (body.size() != 2) malformed(at, "malformed $scope");
        scopes.push_back(body[1]);
      } else if (tok == "$upscope") {
        until_end("$upscope");
        if (scopes.empty()) malformed(at, "$upscope without open scope");
        scopes.pop_back();
      } else if (tok == "$var") {
        const auto body = until_end("$var");
        if (body.size() < 4 || body.size() > 5) malformed(at, "malformed $var");
        unsigned width = 0;
        const auto [p, ec] =
            std::from_chars(body[1].data(), body[1].data() + body[1].size(), width);
        if (ec != std::errc() || p != body[1].data() + body[1].size() || width == 0)
          malformed(at, "bad $var width '" + body[1] + "'");
        std::string name;
        for (const auto& s : scopes) name += s + ".";
        name += body[3];
        if (body.size() == 5) name += body[4];
        const auto [it, fresh] = widths.emplace(body[2], width);
        if (!fresh && it->second != width) malformed(at, "id '" + body[2] + "' redeclared with another width");
        out.decls.push_back({body[2], width, name});
      } else if (tok == "$enddefinitions") {
        until_end("$enddefinitions");
      } else if (tok == "$dumpvars" || tok == "$dumpall" || tok == "$dumpon" ||
                 tok == "$dumpoff") {
        in_dump = true;
      } else {
        malformed(at, "unknown directive " + tok);
      }
      continue;
    }
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(tok[0])));
    if (c == '#') {
      std::uint64_t t = 0;
      const auto [p, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), t);
      if (tok.size() < 2 || ec != std::errc() || p != tok.data() + tok.size())
        malformed(at, "bad timestamp '" + tok + "'");
      if (t < now) malformed(at, "timestamp " + std::to_string(t) + " decreases from " + std::to_string(now));
      now = t;
    } else if (c == '0' || c == '1' || c == 'x' || c == 'z') {
      if (tok.size() < 2) malformed(at, "scalar change without id");
      add_change(tok.substr(1), std::string(1, c), at);
    } else if (c == 'b') {
      const std::string raw = tok.substr(1);
      const std::string id = need("vector change");
      add_change(id, raw, at);
    } else {
      malformed(at, "unrecognized token '" + tok + "'");
    }
  }
  return out;
}

Timeline to_timeline(const VcdData& vcd) {
  Timeline tl;
  tl.decls = vcd.decls;
  std::unordered_map<std::string, std::vector<std::size_t>> slots;
  for (std::size_t i = 0; i < vcd.decls.size(); ++i) slots[vcd.decls[i].id_code].push_back(i);

  std::vector<BitVec> cur;
  for (const auto& d : vcd.decls) cur.emplace_back(d.width, 'x');
  std::size_t k = 0;
  while (k < vcd.changes.size()) {
    const std::uint64_t t = vcd.changes[k].time;
    for (; k < vcd.changes.size() && vcd.changes[k].time == t; ++k)
      for (std::size_t slot : slots[vcd.changes[k].id_code]) cur[slot] = vcd.changes[k].value;
    tl.frames.push_back({t, cur});
  }
  return tl;
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::string render_cell(const BitVec& v) {
  if (v.size() == 1) return v;
  const std::size_t digits = (v.size() + 3) / 4;
  const BitVec padded = std::string(digits * 4 - v.size(), '0') + v;
  std::string out;
  out.reserve(digits);
  for (std::size_t d = 0; d < digits; ++d) {
    const std::string_view nib(padded.data() + 4 * d, 4);
    if (nib.find('x') != std::string_view::npos) {
      out.push_back('x');
    } else if (nib.find('z') != std::string_view::npos) {
      out.push_back(nib == "zzzz" ? 'z' : 'x');
    } else {
      unsigned val = 0;
      for (char b : nib) val = val * 2 + (b == '1');
      out.push_back("0123456789abcdef"[val]);
    }
  }
  return out;
}

CsvTable vcd_to_csv(const VcdData& vcd) {
  const Timeline tl = to_timeline(vcd);
  CsvTable t;
  t.header.reserve(tl.decls.size() + 1);
  t.header.push_back("time");
  for (const auto& d : tl.decls) t.header.push_back(d.name);
  t.rows.reserve(tl.frames.size());
  for (const Frame& f : tl.frames) {
    std::vector<std::string> row;
    row.reserve(f.values.size() + 1);
    row.push_back(std::to_string(f.time));
    for (const auto& v : f.values) row.push_back(render_cell(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(std::ostream& out, const CsvTable& t) {
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  if (!out) throw Error(Errc::SinkWriteFailure, "CSV sink write failed");
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    auto cells = split_commas(raw);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(Errc::MissingColumn,
                  "line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                      " columns, found " + std::to_string(cells.size()),
                  lineno);
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw Error(Errc::MissingColumn, "CSV has no header row");
  return t;
}

std::vector<ExpectedWrite> parse_reg_trace(std::string_view text) {
  std::vector<ExpectedWrite> out;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const std::string line =
        trim(text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
    ++lineno;
    if (!line.empty()) {
      const bool hex = line.size() == 10 && std::all_of(line.begin(), line.end(), [](char c) {
                         return std::isxdigit(static_cast<unsigned char>(c)) != 0;
                       });
      if (!hex)
        throw Error(Errc::MalformedTraceLine,
                    "line " + std::to_string(lineno) + ": expected 10 hex digits, got '" + line + "'",
                    lineno);
      out.push_back({static_cast<unsigned>(std::stoul(line.substr(0, 2), nullptr, 16)),
                     static_cast<std::uint32_t>(std::stoul(line.substr(2, 8), nullptr, 16))});
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

DiffReport diff_reg_trace(const CsvTable& table, const std::vector<ExpectedWrite>& expected,
                          const DiffColumns& cols) {
  auto require = [&table](const std::string& name) {
    const auto c = table.column(name);
    if (!c) throw Error(Errc::MissingColumn, "missing column '" + name + "'");
    return *c;
  };
  const std::size_t c_we = require(cols.reg_write);
  const std::size_t c_rd = require(cols.rd);
  const std::size_t c_data = require(cols.data);
  const std::size_t c_time = require(cols.time);
  const auto c_pc = table.column(cols.pc);

  DiffReport rep;
  rep.expected = expected;
  for (const auto& row : table.rows) {
    if (row[c_we] != "1") continue;
    ActualWrite w;
    w.time = row[c_time];
    if (const auto rd = parse_hex_cell(row[c_rd])) w.rd = *rd;
    w.value = parse_hex_cell(row[c_data]);
    if (c_pc) w.pc = parse_hex_cell(row[*c_pc]);
    if (w.rd && *w.rd == 0) continue;
    rep.actual.push_back(std::move(w));
  }

  std::ostringstream out;
  char buf[160];
  auto rd_str = [](const std::optional<unsigned>& rd) {
    return rd ? "x" + std::to_string(*rd) : std::string("x?");
  };
  auto val_str = [](const std::optional<std::uint32_t>& v) {
    char b[16];
    if (!v) return std::string("0x????????");
    std::snprintf(b, sizeof b, "0x%08x", *v);
    return std::string(b);
  };
  auto pc_str = [](const std::optional<std::uint32_t>& pc) {
    char b[16];
    if (!pc) return std::string("?");
    std::snprintf(b, sizeof b, "0x%04x", *pc);
    return std::string(b);
  };

  out << "Expected writes (from reg_trace.hex):\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(10, expected.size()); ++i) {
    std::snprintf(buf, sizeof buf, "  Write %zu: x%u = 0x%08x\n", i, expected[i].rd, expected[i].value);
    out << buf;
  }
  out << "\nActual writes (from VCD):\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(10, rep.actual.size()); ++i) {
    const auto& w = rep.actual[i];
    out << "  Write " << i << ": " << rd_str(w.rd) << " = " << val_str(w.value)
        << " (time=" << w.time << ", PC=" << pc_str(w.pc) << ")\n";
  }
  const std::string rule(80, '=');
  out << '\n' << rule << "\nMISMATCH ANALYSIS\n" << rule << '\n';

  for (std::size_t i = 0; i < expected.size(); ++i) {
    const ExpectedWrite& e = expected[i];
    if (i >= rep.actual.size()) {
      rep.outcome = DiffReport::Outcome::MissingWrite;
      rep.index = i;
      std::snprintf(buf, sizeof buf, "\nMissing write %zu: Expected x%u = 0x%08x\n", i, e.rd, e.value);
      out << buf;
      break;
    }
    const ActualWrite& a = rep.actual[i];
    const bool rd_ok = a.rd && *a.rd == e.rd;
    const bool val_ok = a.value && *a.value == e.value;
    if (rd_ok && val_ok) continue;
    rep.outcome = DiffReport::Outcome::Mismatch;
    rep.index = i;
    std::snprintf(buf, sizeof buf, "\nMISMATCH at write %zu:\n  Expected: x%u = 0x%08x\n", i, e.rd,
                  e.value);
    out << buf;
    out << "  Got:      " << rd_str(a.rd) << " = " << val_str(a.value) << " (time=" << a.time
        << ", PC=" << pc_str(a.pc) << ")\n";
    if (!rd_ok)
      out << "  ERROR: Register address mismatch! Expected x" << e.rd << ", got " << rd_str(a.rd)
          << '\n';
    if (!val_ok) {
      std::snprintf(buf, sizeof buf, "0x%08x", e.value);
      out << "  ERROR: Value mismatch! Expected " << buf << ", got " << val_str(a.value) << '\n';
    }
    break;
  }
  if (rep.ok()) {
    out << "\nNo mismatch: " << expected.size() << " writes compared\n";
    if (rep.actual.size() > expected.size())
      out << "Note: " << rep.actual.size() - expected.size()
          << " additional writes beyond the end of reg_trace.hex\n";
  }
  rep.text = out.str();
  return rep;
}

}  // namespace vercore::trace
