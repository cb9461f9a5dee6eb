#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nwp/grid.hpp"

namespace nwp {

// Archive layout (.nws), all little-endian:
//   magic      8 bytes "NWPSTAT1"
//   version    u32
//   nlat, nlon u32
//   lat_start, dlat, lon_start, dlon  f64
//   valid_time i64, seconds since the Unix epoch (UTC)
//   label      u16 byte length + UTF-8 bytes
//   n_channels u32, then per channel: var_code u16 + level u16 (hPa, 0 = surface)
//   payload    n_channels planes of nlat*nlon f32, row-major, north row first

inline constexpr std::string_view kArchiveMagic = "NWPSTAT1";
inline constexpr std::uint32_t kArchiveVersion = 1;
inline constexpr std::string_view kArchiveExtension = ".nws";

struct ArchiveHeader {
    std::uint32_t version = kArchiveVersion;
    GridSpec grid;
    TimePoint valid_time{};
    std::string source_label;
    std::vector<ChannelId> channels;

    /// Serialized byte size of this header.
    std::size_t byte_size() const noexcept;
    /// Payload bytes implied by the header.
    std::uint64_t payload_size() const noexcept;
};

/// Header only bytes for a canonical state on `grid` with `label`.
std::size_t archive_header_size(std::size_t label_bytes) noexcept;

void write_archive(const StateSet& state, std::ostream& sink);
void write_archive(const StateSet& state, const std::filesystem::path& path);

ArchiveHeader read_archive_header(std::istream& source);
StateSet read_archive(std::istream& source);
StateSet read_archive(const std::filesystem::path& path);
ArchiveHeader read_archive_header(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Raw float32 dumps
// ---------------------------------------------------------------------------

enum class ScanOrder { NorthFirst, SouthFirst };
enum class ViolationPolicy { Error, Warn };

struct RawDumpLayout {
    /// Empty means the canonical 69-channel order.
    std::vector<ChannelId> channels;
    ScanOrder scan = ScanOrder::NorthFirst;

    std::vector<ChannelId> resolved_channels() const;
};

struct IngestOptions {
    ViolationPolicy nan_policy = ViolationPolicy::Error;
    /// Range violations warn by default.
    RangeLimits range_limits{};
    ViolationPolicy range_policy = ViolationPolicy::Warn;
    /// Receives warnings; defaults to stderr.
    std::function<void(const std::string&)> warn;
};

ScanOrder parse_scan_order(std::string_view text);
std::string_view scan_order_name(ScanOrder s) noexcept;

/// Reads the planes of a raw dump in layout order, rows flipped to north-first.
/// Any channel list is accepted here; the file size must match exactly.
std::vector<Field> read_raw_planes(const std::filesystem::path& path, const GridSpec& grid, const RawDumpLayout& layout,
                                   const IngestOptions& options = {});

/// Ingests a raw dump covering all 69 channels into a canonical state.
StateSet ingest_raw(const std::filesystem::path& path, const GridSpec& grid, const RawDumpLayout& layout,
                    TimePoint valid_time, std::string source_label, const IngestOptions& options = {});

/// Writes a state's planes as a raw dump in the given layout.
void write_raw(const StateSet& state, const std::filesystem::path& path, const RawDumpLayout& layout = {});

}  // namespace nwp
