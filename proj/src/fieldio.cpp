#include "nwp/fieldio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "nwp/error.hpp"

namespace nwp {

namespace {

static_assert(std::numeric_limits<float>::is_iec559 && std::numeric_limits<double>::is_iec559);

template <typename T>
void put_le(std::string& buf, T value) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t b = 0; b < sizeof(T); ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

template <typename T>
T get_le(const unsigned char* p) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    U bits = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) bits |= static_cast<U>(p[b]) << (8 * b);
    return std::bit_cast<T>(bits);
}

/// Encodes a plane as f32-le bytes.
void encode_plane(std::span<const float> values, std::string& out) {
    out.resize(values.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data(), values.data(), out.size());
    } else {
        out.clear();
        for (float v : values) put_le(out, v);
    }
}

void decode_plane(const char* bytes, std::vector<float>& values) {
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(values.data(), bytes, values.size() * 4);
    } else {
        const auto* p = reinterpret_cast<const unsigned char*>(bytes);
        for (std::size_t k = 0; k < values.size(); ++k) values[k] = get_le<float>(p + 4 * k);
    }
}

/// Reads exactly n bytes or reports how many were available.
std::size_t read_bytes(std::istream& in, char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount());
}

class HeaderReader {
public:
    explicit HeaderReader(std::istream& in) : in_(in) {}

    template <typename T>
    T get(std::string_view what) {
        unsigned char buf[sizeof(T)];
        if (read_bytes(in_, reinterpret_cast<char*>(buf), sizeof(T)) != sizeof(T))
            throw TruncationError(fmt::format("archive header truncated while reading {}", what));
        return get_le<T>(buf);
    }

    std::string get_string(std::size_t n, std::string_view what) {
        std::string s(n, '\0');
        if (read_bytes(in_, s.data(), n) != n)
            throw TruncationError(fmt::format("archive header truncated while reading {}", what));
        return s;
    }

private:
    std::istream& in_;
};

void emit_warning(const IngestOptions& options, const std::string& msg) {
    if (options.warn)
        options.warn(msg);
    else
        std::cerr << "warning: " << msg << '\n';
}

}  // namespace

std::size_t archive_header_size(std::size_t label_bytes) noexcept {
    return 8 + 4 + 4 + 4 + 4 * 8 + 8 + 2 + label_bytes + 4 + kChannelCount * 4;
}

std::size_t ArchiveHeader::byte_size() const noexcept {
    return 8 + 4 + 4 + 4 + 4 * 8 + 8 + 2 + source_label.size() + 4 + channels.size() * 4;
}

std::uint64_t ArchiveHeader::payload_size() const noexcept {
    return static_cast<std::uint64_t>(channels.size()) * grid.nlat * grid.nlon * 4;
}

void write_archive(const StateSet& state, std::ostream& sink) {
    state.require_canonical();
    state.grid().validate();
    const auto& g = state.grid();
    if (g.nlat > std::numeric_limits<std::uint32_t>::max() || g.nlon > std::numeric_limits<std::uint32_t>::max())
        throw InvalidStateError("grid too large for archive format");
    if (state.source_label().size() > std::numeric_limits<std::uint16_t>::max())
        throw InvalidStateError("source label longer than 65535 bytes");

    std::string header;
    header.reserve(archive_header_size(state.source_label().size()));
    header.append(kArchiveMagic);
    put_le(header, kArchiveVersion);
    put_le(header, static_cast<std::uint32_t>(g.nlat));
    put_le(header, static_cast<std::uint32_t>(g.nlon));
    put_le(header, g.lat_start);
    put_le(header, g.dlat);
    put_le(header, g.lon_start);
    put_le(header, g.dlon);
    put_le(header, static_cast<std::int64_t>(state.valid_time().time_since_epoch().count()));
    put_le(header, static_cast<std::uint16_t>(state.source_label().size()));
    header.append(state.source_label());
    put_le(header, static_cast<std::uint32_t>(state.fields().size()));
    for (const auto& f : state.fields()) {
        put_le(header, static_cast<std::uint16_t>(f.variable()));
        put_le(header, f.level().hpa);
    }
    sink.write(header.data(), static_cast<std::streamsize>(header.size()));

    std::string plane;
    for (const auto& f : state.fields()) {
        encode_plane(f.values(), plane);
        sink.write(plane.data(), static_cast<std::streamsize>(plane.size()));
        if (!sink) break;
    }
    if (!sink) throw IoError("archive write failed");
}

void write_archive(const StateSet& state, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    write_archive(state, out);
    out.close();
    if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

ArchiveHeader read_archive_header(std::istream& source) {
    char magic[8];
    const std::size_t got = read_bytes(source, magic, sizeof magic);
    if (got != sizeof magic || std::string_view(magic, sizeof magic) != kArchiveMagic) {
        if (got == sizeof magic || got == 0 || std::string_view(magic, got) != kArchiveMagic.substr(0, got))
            throw FormatError("bad archive magic (not an NWPSTAT1 file)");
        throw TruncationError("archive header truncated while reading magic");
    }

    HeaderReader r(source);
    ArchiveHeader h;
    h.version = r.get<std::uint32_t>("version");
    if (h.version != kArchiveVersion) throw FormatError(fmt::format("unsupported archive version {}", h.version));
    h.grid.nlat = r.get<std::uint32_t>("nlat");
    h.grid.nlon = r.get<std::uint32_t>("nlon");
    h.grid.lat_start = r.get<double>("lat_start");
    h.grid.dlat = r.get<double>("dlat");
    h.grid.lon_start = r.get<double>("lon_start");
    h.grid.dlon = r.get<double>("dlon");
    h.valid_time = TimePoint{std::chrono::seconds{r.get<std::int64_t>("valid_time")}};
    const auto label_len = r.get<std::uint16_t>("label length");
    h.source_label = r.get_string(label_len, "source label");
    const auto n_channels = r.get<std::uint32_t>("channel count");
    if (n_channels > 4096) throw FormatError(fmt::format("implausible channel count {}", n_channels));
    h.channels.reserve(n_channels);
    for (std::uint32_t k = 0; k < n_channels; ++k) {
        const auto code = r.get<std::uint16_t>("channel list");
        const auto level = r.get<std::uint16_t>("channel list");
        const auto var = variable_from_code(code);
        if (!var) throw FormatError(fmt::format("unknown variable code {} in channel {}", code, k));
        h.channels.push_back({*var, PressureLevel{level}});
    }
    try {
        h.grid.validate();
    } catch (const InvalidGridError& e) {
        throw FormatError(fmt::format("archive header: {}", e.what()));
    }
    return h;
}

StateSet read_archive(std::istream& source) {
    ArchiveHeader h = read_archive_header(source);
    const auto& canon = canonical_channels();
    if (h.channels.size() != kChannelCount || !std::equal(h.channels.begin(), h.channels.end(), canon.begin()))
        throw UnsupportedLayoutError(
            fmt::format("archive channel list ({} channels) is not the canonical 69-channel order", h.channels.size()));

    const std::size_t plane_bytes = h.grid.size() * 4;
    std::vector<char> buf(plane_bytes);
    std::vector<Field> fields;
    fields.reserve(kChannelCount);
    for (const auto& ch : h.channels) {
        const std::size_t got = read_bytes(source, buf.data(), plane_bytes);
        if (got != plane_bytes)
            throw TruncationError(fmt::format("archive truncated in channel {} ({} of {} bytes)", channel_name(ch), got,
                                              plane_bytes));
        std::vector<float> values(h.grid.size());
        decode_plane(buf.data(), values);
        fields.emplace_back(ch, h.grid, std::move(values));
    }
    return StateSet(h.valid_time, std::move(h.source_label), h.grid, std::move(fields));
}

StateSet read_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    return read_archive(in);
}

ArchiveHeader read_archive_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    return read_archive_header(in);
}

// ---------------------------------------------------------------------------

std::vector<ChannelId> RawDumpLayout::resolved_channels() const {
    if (channels.empty()) {
        const auto& c = canonical_channels();
        return {c.begin(), c.end()};
    }
    return channels;
}

ScanOrder parse_scan_order(std::string_view text) {
    if (text == "north-first") return ScanOrder::NorthFirst;
    if (text == "south-first") return ScanOrder::SouthFirst;
    throw LayoutError(fmt::format("unknown scan order '{}' (expected north-first or south-first)", text));
}

std::string_view scan_order_name(ScanOrder s) noexcept {
    return s == ScanOrder::NorthFirst ? "north-first" : "south-first";
}

std::vector<Field> read_raw_planes(const std::filesystem::path& path, const GridSpec& grid, const RawDumpLayout& layout,
                                   const IngestOptions& options) {
    grid.validate();
    const auto channels = layout.resolved_channels();
    {
        std::set<std::size_t> seen;
        for (const auto& c : channels)
            if (!seen.insert(state_channel_index(c).flat()).second)
                throw LayoutError(fmt::format("channel {} listed twice in raw layout", channel_name(c)));
    }

    std::error_code ec;
    const auto actual = std::filesystem::file_size(path, ec);
    if (ec) throw IoError(fmt::format("cannot stat '{}': {}", path.string(), ec.message()));
    const std::uint64_t expected = static_cast<std::uint64_t>(channels.size()) * grid.size() * 4;
    if (actual != expected)
        throw LayoutError(fmt::format("raw dump '{}' has {} bytes, layout ({} channels x {}x{} x 4) needs {}",
                                      path.string(), actual, channels.size(), grid.nlat, grid.nlon, expected));

    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));

    std::vector<char> buf(grid.size() * 4);
    std::vector<Field> fields;
    fields.reserve(channels.size());
    for (const auto& ch : channels) {
        if (read_bytes(in, buf.data(), buf.size()) != buf.size())
            throw IoError(fmt::format("short read in channel {} of '{}'", channel_name(ch), path.string()));
        std::vector<float> values(grid.size());
        decode_plane(buf.data(), values);
        if (layout.scan == ScanOrder::SouthFirst) {
            for (std::size_t top = 0, bottom = grid.nlat - 1; top < bottom; ++top, --bottom)
                std::swap_ranges(values.begin() + static_cast<std::ptrdiff_t>(top * grid.nlon),
                                 values.begin() + static_cast<std::ptrdiff_t>((top + 1) * grid.nlon),
                                 values.begin() + static_cast<std::ptrdiff_t>(bottom * grid.nlon));
        }
        const auto bad = static_cast<std::size_t>(
            std::count_if(values.begin(), values.end(), [](float v) { return !std::isfinite(v); }));
        if (bad > 0) {
            const auto msg = fmt::format("{} non-finite values in channel {} of '{}'", bad, channel_name(ch), path.string());
            if (options.nan_policy == ViolationPolicy::Error) throw DataError(msg);
            emit_warning(options, msg);
        }
        fields.emplace_back(ch, grid, std::move(values));
    }
    return fields;
}

StateSet ingest_raw(const std::filesystem::path& path, const GridSpec& grid, const RawDumpLayout& layout,
                    TimePoint valid_time, std::string source_label, const IngestOptions& options) {
    const auto channels = layout.resolved_channels();
    if (channels.size() != kChannelCount)
        throw LayoutError(fmt::format("raw layout lists {} channels, a full state needs {}", channels.size(), kChannelCount));

    auto planes = read_raw_planes(path, grid, layout, options);
    std::vector<std::optional<Field>> slots(kChannelCount);
    for (auto& f : planes) slots[state_channel_index(f.channel()).flat()].emplace(std::move(f));
    std::vector<Field> fields;
    fields.reserve(kChannelCount);
    for (auto& s : slots) fields.push_back(std::move(*s));

    StateSet state(valid_time, std::move(source_label), grid, std::move(fields));
    if (options.range_limits.enabled) {
        RangeLimits limits = options.range_limits;
        const auto report = validate_state(state, limits);
        std::string msg;
        for (const auto& v : report.violations)
            if (v.kind == ViolationKind::Range) msg += (msg.empty() ? "" : "; ") + v.message;
        if (!msg.empty()) {
            msg = fmt::format("'{}': {}", path.string(), msg);
            if (options.range_policy == ViolationPolicy::Error) throw DataError(msg);
            emit_warning(options, msg);
        }
    }
    return state;
}

void write_raw(const StateSet& state, const std::filesystem::path& path, const RawDumpLayout& layout) {
    const auto& g = state.grid();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    std::string bytes;
    for (const auto& ch : layout.resolved_channels()) {
        const Field& f = state.channel(ch);
        std::vector<float> values(f.values().begin(), f.values().end());
        if (layout.scan == ScanOrder::SouthFirst) {
            std::vector<float> flipped(values.size());
            for (std::size_t i = 0; i < g.nlat; ++i)
                std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(i * g.nlon), g.nlon,
                            flipped.begin() + static_cast<std::ptrdiff_t>((g.nlat - 1 - i) * g.nlon));
            values.swap(flipped);
        }
        encode_plane(values, bytes);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    out.close();
    if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace nwp
