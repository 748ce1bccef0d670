#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vercore {

enum class Errc {
  IllegalInstruction,
  OutOfRangeImmediate,
  InvalidOperandForFormat,
  MisalignedAccess,
  MisalignedFetch,
  FetchFromUninitializedMemory,
  IssueWhileBusy,
  ZeroRetired,
  MalformedVcd,
  SinkWriteFailure,
  MissingColumn,
  MalformedTraceLine,
  MalformedHexLine,
  NotElf,
  Not32Bit,
  NotLittleEndian,
  NotRiscv,
  TruncatedFile,
  BadLayout,
  IoError,
};

std::string_view errc_name(Errc code);

/// Single exception type for the library. `line()` is set by the text parsers
/// (VCD, hex, reg_trace) and names the 1-based input line that failed.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(what), code_(code), line_(line) {}

  Errc code() const { return code_; }
  std::optional<std::size_t> line() const { return line_; }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
};

}  // namespace vercore
