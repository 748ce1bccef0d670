#include "vercore/memory.hpp"

#include <elf.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vercore/error.hpp"

namespace vercore {

MemoryImage::Page& MemoryImage::page_for(std::uint32_t addr) { return pages_[addr >> kPageBits]; }

const MemoryImage::Page* MemoryImage::find_page(std::uint32_t addr) const {
  auto it = pages_.find(addr >> kPageBits);
  return it == pages_.end() ? nullptr : &it->second;
}

void MemoryImage::write_byte(std::uint32_t addr, std::uint8_t value) {
  Page& p = page_for(addr);
  const std::uint32_t off = addr & (kPageSize - 1);
  p.data[off] = value;
  p.init.set(off);
}

void MemoryImage::write_block(std::uint32_t addr, std::span<const std::uint8_t> bytes) {
  for (std::size_t i = 0; i < bytes.size(); ++i)
    write_byte(addr + static_cast<std::uint32_t>(i), bytes[i]);
}

std::optional<std::uint32_t> MemoryImage::write_bytes(std::uint32_t addr, std::uint32_t data,
                                                      std::uint8_t byte_en) {
  const std::uint32_t word = addr & ~3u;
  for (unsigned i = 0; i < 4; ++i)
    if (byte_en & (1u << i)) write_byte(word + i, static_cast<std::uint8_t>(data >> (8 * i)));
  if (tohost_ && (byte_en & 0xf) == 0xf && word == *tohost_) return data;
  return std::nullopt;
}

bool MemoryImage::is_initialized(std::uint32_t addr) const {
  const Page* p = find_page(addr);
  return p && p->init.test(addr & (kPageSize - 1));
}

std::uint8_t MemoryImage::peek_byte(std::uint32_t addr) const {
  const Page* p = find_page(addr);
  return p ? p->data[addr & (kPageSize - 1)] : 0;
}

std::uint32_t MemoryImage::peek_word(std::uint32_t addr) const {
  const std::uint32_t word = addr & ~3u;
  // An aligned word never straddles a page.
  const Page* p = find_page(word);
  if (!p) return 0;
  const std::uint32_t off = word & (kPageSize - 1);
  return std::uint32_t{p->data[off]} | (std::uint32_t{p->data[off + 1]} << 8) |
         (std::uint32_t{p->data[off + 2]} << 16) | (std::uint32_t{p->data[off + 3]} << 24);
}

std::uint32_t MemoryImage::read_word(std::uint32_t addr) {
  const std::uint32_t word = addr & ~3u;
  const Page* p = find_page(word);
  const std::uint32_t off = word & (kPageSize - 1);
  if (!p || !(p->init.test(off) && p->init.test(off + 1) && p->init.test(off + 2) &&
              p->init.test(off + 3)))
    ++uninit_reads_;
  return peek_word(word);
}

std::uint32_t MemoryImage::read_data(std::uint32_t addr, unsigned width) {
  std::uint32_t v = 0;
  bool uninit = false;
  for (unsigned i = 0; i < width; ++i) {
    uninit |= !is_initialized(addr + i);
    v |= std::uint32_t{peek_byte(addr + i)} << (8 * i);
  }
  if (uninit) ++uninit_reads_;
  return v;
}

std::optional<std::uint32_t> MemoryImage::fetch_word(std::uint32_t addr) const {
  const std::uint32_t word = addr & ~3u;
  const Page* p = find_page(word);
  const std::uint32_t off = word & (kPageSize - 1);
  if (!p || !(p->init.test(off) && p->init.test(off + 1) && p->init.test(off + 2) &&
              p->init.test(off + 3)))
    return std::nullopt;
  return peek_word(word);
}

std::vector<MemoryImage::Range> MemoryImage::initialized_ranges() const {
  std::vector<std::uint32_t> keys;
  keys.reserve(pages_.size());
  for (const auto& [k, _] : pages_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());

  std::vector<Range> out;
  bool open = false;
  std::uint32_t begin = 0;
  std::uint32_t prev_end = 0;
  for (std::uint32_t k : keys) {
    const Page& p = pages_.at(k);
    for (std::uint32_t off = 0; off < kPageSize; ++off) {
      const std::uint32_t addr = (k << kPageBits) | off;
      if (p.init.test(off)) {
        if (open && prev_end != addr) {
          out.push_back({begin, prev_end});
          open = false;
        }
        if (!open) {
          begin = addr;
          open = true;
        }
        prev_end = addr + 1;
      }
    }
  }
  if (open) out.push_back({begin, prev_end});
  return out;
}

std::size_t MemoryImage::initialized_bytes() const {
  std::size_t n = 0;
  for (const auto& [_, p] : pages_) n += p.init.count();
  return n;
}

namespace {

template <typename T>
T read_struct(std::span<const std::uint8_t> bytes, std::uint64_t offset, const char* what) {
  if (offset + sizeof(T) > bytes.size())
    throw Error(Errc::TruncatedFile, std::string("ELF truncated reading ") + what);
  T out;
  std::memcpy(&out, bytes.data() + offset, sizeof(T));
  return out;
}

}  // namespace

std::pair<MemoryImage, ElfSummary> load_elf(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < SELFMAG || std::memcmp(bytes.data(), ELFMAG, SELFMAG) != 0)
    throw Error(Errc::NotElf, "missing ELF magic");
  if (bytes.size() < EI_NIDENT) throw Error(Errc::TruncatedFile, "ELF identification truncated");
  if (bytes[EI_CLASS] != ELFCLASS32) throw Error(Errc::Not32Bit, "ELF class is not ELFCLASS32");
  if (bytes[EI_DATA] != ELFDATA2LSB)
    throw Error(Errc::NotLittleEndian, "ELF data encoding is not little-endian");
  const auto eh = read_struct<Elf32_Ehdr>(bytes, 0, "file header");
  if (eh.e_machine != EM_RISCV) throw Error(Errc::NotRiscv, "ELF machine is not RISC-V");

  MemoryImage img;
  ElfSummary summary;
  summary.entry = eh.e_entry;

  if (eh.e_phnum != 0 && eh.e_phentsize != sizeof(Elf32_Phdr))
    throw Error(Errc::BadLayout, "unexpected program header size");
  for (unsigned i = 0; i < eh.e_phnum; ++i) {
    const auto ph = read_struct<Elf32_Phdr>(
        bytes, std::uint64_t{eh.e_phoff} + std::uint64_t{i} * sizeof(Elf32_Phdr), "program header");
    if (ph.p_type != PT_LOAD || ph.p_memsz == 0) continue;
    if (ph.p_filesz > ph.p_memsz) throw Error(Errc::BadLayout, "segment file size exceeds mem size");
    if (std::uint64_t{ph.p_offset} + ph.p_filesz > bytes.size())
      throw Error(Errc::TruncatedFile, "segment contents extend past end of file");
    for (const auto& s : summary.segments) {
      const std::uint64_t a0 = s.vaddr, a1 = a0 + s.mem_size;
      const std::uint64_t b0 = ph.p_vaddr, b1 = b0 + ph.p_memsz;
      if (a0 < b1 && b0 < a1) throw Error(Errc::BadLayout, "overlapping PT_LOAD segments");
    }
    img.write_block(ph.p_vaddr, bytes.subspan(ph.p_offset, ph.p_filesz));
    for (std::uint32_t off = ph.p_filesz; off < ph.p_memsz; ++off) img.write_byte(ph.p_vaddr + off, 0);
    summary.segments.push_back({ph.p_vaddr, ph.p_filesz, ph.p_memsz});
  }

  const bool entry_loaded = std::any_of(summary.segments.begin(), summary.segments.end(),
                                        [&](const ElfSegment& s) {
                                          return eh.e_entry >= s.vaddr &&
                                                 std::uint64_t{eh.e_entry} <
                                                     std::uint64_t{s.vaddr} + s.mem_size;
                                        });
  if (!summary.segments.empty() && !entry_loaded)
    throw Error(Errc::BadLayout, "entry point is outside every loaded segment");

  if (eh.e_shnum != 0 && eh.e_shentsize == sizeof(Elf32_Shdr)) {
    for (unsigned i = 0; i < eh.e_shnum; ++i) {
      const auto sh = read_struct<Elf32_Shdr>(
          bytes, std::uint64_t{eh.e_shoff} + std::uint64_t{i} * sizeof(Elf32_Shdr), "section header");
      if (sh.sh_type != SHT_SYMTAB || sh.sh_entsize != sizeof(Elf32_Sym)) continue;
      if (sh.sh_link >= eh.e_shnum) throw Error(Errc::BadLayout, "symbol table string link invalid");
      const auto strh = read_struct<Elf32_Shdr>(
          bytes, std::uint64_t{eh.e_shoff} + std::uint64_t{sh.sh_link} * sizeof(Elf32_Shdr),
          "string table header");
      if (std::uint64_t{strh.sh_offset} + strh.sh_size > bytes.size())
        throw Error(Errc::TruncatedFile, "string table extends past end of file");
      const auto strtab = bytes.subspan(strh.sh_offset, strh.sh_size);
      const unsigned count = sh.sh_size / sizeof(Elf32_Sym);
      for (unsigned j = 0; j < count; ++j) {
        const auto sym = read_struct<Elf32_Sym>(
            bytes, std::uint64_t{sh.sh_offset} + std::uint64_t{j} * sizeof(Elf32_Sym), "symbol");
        if (sym.st_name == 0 || sym.st_name >= strtab.size()) continue;
        const char* begin = reinterpret_cast<const char*>(strtab.data()) + sym.st_name;
        const std::size_t max_len = strtab.size() - sym.st_name;
        const std::string name(begin, strnlen(begin, max_len));
        if (!name.empty()) summary.symbols.emplace(name, sym.st_value);
      }
    }
  }

  if (auto it = summary.symbols.find("tohost"); it != summary.symbols.end())
    img.set_tohost_addr(it->second);
  return {std::move(img), std::move(summary)};
}

MemoryImage load_hex(std::string_view text, std::uint32_t base) {
  MemoryImage img;
  std::uint32_t addr = base;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (auto c = line.find("//"); c != std::string_view::npos) line = line.substr(0, c);
    if (auto c = line.find('#'); c != std::string_view::npos) line = line.substr(0, c);

    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r'))
        ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
      std::string_view tok = line.substr(pos, end - pos);
      pos = end;

      const bool directive = tok.front() == '@';
      if (directive) tok.remove_prefix(1);
      std::uint32_t value = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value, 16);
      if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size() ||
          (!directive && tok.size() > 8))
        throw Error(Errc::MalformedHexLine,
                    "hex line " + std::to_string(line_no) + ": bad token '" + std::string(tok) + "'",
                    line_no);
      if (directive) {
        addr = value;
        continue;
      }
      for (unsigned i = 0; i < 4; ++i) img.write_byte(addr + i, static_cast<std::uint8_t>(value >> (8 * i)));
      addr += 4;
    }
  }
  return img;
}

MemoryImage load_bin(std::span<const std::uint8_t> bytes, std::uint32_t base) {
  MemoryImage img;
  img.write_block(base, bytes);
  return img;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LoadedProgram load_program_file(const std::string& path, ProgramFormat fmt, std::uint32_t base) {
  const auto bytes = read_file_bytes(path);
  if (fmt == ProgramFormat::Auto) {
    auto ends_with = [&](std::string_view suffix) {
      return path.size() >= suffix.size() &&
             std::string_view(path).substr(path.size() - suffix.size()) == suffix;
    };
    if (bytes.size() >= SELFMAG && std::memcmp(bytes.data(), ELFMAG, SELFMAG) == 0)
      fmt = ProgramFormat::Elf;
    else if (ends_with(".hex") || ends_with(".mem"))
      fmt = ProgramFormat::Hex;
    else
      fmt = ProgramFormat::Bin;
  }

  LoadedProgram out;
  switch (fmt) {
    case ProgramFormat::Elf: {
      auto [img, summary] = load_elf(bytes);
      out.image = std::move(img);
      out.entry = summary.entry;
      out.elf = std::move(summary);
      break;
    }
    case ProgramFormat::Hex:
      out.image = load_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), base);
      out.entry = base;
      break;
    case ProgramFormat::Bin:
    case ProgramFormat::Auto:
      out.image = load_bin(bytes, base);
      out.entry = base;
      break;
  }
  return out;
}

}  // namespace vercore
