#pragma once

// Sparse little-endian byte store shared by the golden model and the
// pipeline, plus ELF32 / readmemh / raw-binary program loaders.

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace vercore {

class MemoryImage {
 public:
  static constexpr std::uint32_t kPageBits = 12;
  static constexpr std::uint32_t kPageSize = 1u << kPageBits;

  struct Range {
    std::uint32_t begin;
    std::uint32_t end;  // exclusive, may be 0 when wrapping past 0xffffffff
    bool operator==(const Range&) const = default;
  };

  void write_byte(std::uint32_t addr, std::uint8_t value);
  void write_block(std::uint32_t addr, std::span<const std::uint8_t> bytes);

  /// Stores byte i of `data` for each set bit i of `byte_en`. `addr` is rounded
  /// down to the containing word, matching the data-cache bus. Returns the
  /// stored value when this is a full-word write to the tohost address.
  std::optional<std::uint32_t> write_bytes(std::uint32_t addr, std::uint32_t data,
                                           std::uint8_t byte_en);

  bool is_initialized(std::uint32_t addr) const;
  std::uint8_t peek_byte(std::uint32_t addr) const;  // 0 when uninitialized

  /// Data-side word read. Uninitialized bytes read as 0 and bump
  /// uninitialized_reads().
  std::uint32_t read_word(std::uint32_t addr);

  /// Little-endian read of `width` (1, 2 or 4) bytes starting at `addr`; any
  /// uninitialized byte reads as 0 and the access counts once as uninitialized.
  std::uint32_t read_data(std::uint32_t addr, unsigned width);

  /// Side-effect-free word read of the aligned word containing `addr`.
  std::uint32_t peek_word(std::uint32_t addr) const;

  /// Instruction-side read; nullopt if any byte of the word is uninitialized.
  std::optional<std::uint32_t> fetch_word(std::uint32_t addr) const;

  std::optional<std::uint32_t> tohost_addr() const { return tohost_; }
  void set_tohost_addr(std::optional<std::uint32_t> addr) { tohost_ = addr; }

  std::uint64_t uninitialized_reads() const { return uninit_reads_; }

  /// Maximal runs of initialized bytes in ascending address order.
  std::vector<Range> initialized_ranges() const;

  std::size_t initialized_bytes() const;

 private:
  struct Page {
    std::array<std::uint8_t, kPageSize> data{};
    std::bitset<kPageSize> init;
  };

  Page& page_for(std::uint32_t addr);
  const Page* find_page(std::uint32_t addr) const;

  std::unordered_map<std::uint32_t, Page> pages_;
  std::optional<std::uint32_t> tohost_;
  std::uint64_t uninit_reads_ = 0;
};

struct ElfSegment {
  std::uint32_t vaddr;
  std::uint32_t file_size;
  std::uint32_t mem_size;
  bool operator==(const ElfSegment&) const = default;
};

struct ElfSummary {
  std::uint32_t entry = 0;
  std::vector<ElfSegment> segments;
  std::map<std::string, std::uint32_t> symbols;
};

struct LoadedProgram {
  MemoryImage image;
  std::uint32_t entry = 0;
  std::optional<ElfSummary> elf;
};

/// Validates and loads a little-endian RISC-V ELF32 executable. The "tohost"
/// symbol, when present, becomes the image's tohost address.
std::pair<MemoryImage, ElfSummary> load_elf(std::span<const std::uint8_t> bytes);

/// readmemh-style text: one 32-bit hex word per token, "@addr" directives set
/// the byte address of the next word, "//" and "#" start comments.
MemoryImage load_hex(std::string_view text, std::uint32_t base);

MemoryImage load_bin(std::span<const std::uint8_t> bytes, std::uint32_t base);

enum class ProgramFormat { Auto, Elf, Hex, Bin };

/// Loads a program file. Auto picks ELF by magic, hex by ".hex"/".mem"
/// extension, raw binary otherwise. `base` is the load address for hex/bin and
/// the entry point for them.
LoadedProgram load_program_file(const std::string& path, ProgramFormat fmt, std::uint32_t base);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

}  // namespace vercore
