#include "vercore/error.hpp"

namespace vercore {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::IllegalInstruction: return "IllegalInstruction";
    case Errc::OutOfRangeImmediate: return "OutOfRangeImmediate";
    case Errc::InvalidOperandForFormat: return "InvalidOperandForFormat";
    case Errc::MisalignedAccess: return "MisalignedAccess";
    case Errc::MisalignedFetch: return "MisalignedFetch";
    case Errc::FetchFromUninitializedMemory: return "FetchFromUninitializedMemory";
    case Errc::IssueWhileBusy: return "IssueWhileBusy";
    case Errc::ZeroRetired: return "ZeroRetired";
    case Errc::MalformedVcd: return "MalformedVcd";
    case Errc::SinkWriteFailure: return "SinkWriteFailure";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::MalformedTraceLine: return "MalformedTraceLine";
    case Errc::MalformedHexLine: return "MalformedHexLine";
    case Errc::NotElf: return "NotElf";
    case Errc::Not32Bit: return "Not32Bit";
    case Errc::NotLittleEndian: return "NotLittleEndian";
    case Errc::NotRiscv: return "NotRiscv";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::BadLayout: return "BadLayout";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace vercore
