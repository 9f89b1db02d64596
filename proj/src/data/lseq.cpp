#include "ldif/data/lseq.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "ldif/error.hpp"

namespace ldif::data {

namespace {

constexpr std::string_view kMagic = "LSEQ1";
constexpr std::size_t kMaxHeader = 512;

static_assert(std::endian::native == std::endian::little, "LSEQ1 I/O assumes a little-endian host");

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void append_values(std::string& out, const double* p, std::size_t n) {
    out.append(reinterpret_cast<const char*>(p), n * sizeof(double));
}

std::size_t parse_size(const std::map<std::string, std::string>& fields, const std::string& key, std::size_t offset) {
    auto it = fields.find(key);
    if (it == fields.end()) throw ParseError("malformed header: missing '" + key + "'", offset);
    std::size_t value = 0;
    const auto& s = it->second;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError("malformed header: bad value for '" + key + "'", offset);
    }
    return value;
}

}  // namespace

std::string encode_sequence(const DialoguePair& pair) {
    pair.validate();
    const auto& d = pair.dims;
    std::string out = std::string(kMagic) + " expr=" + std::to_string(d.expr_dim) +
                      " identity=" + std::to_string(d.identity_dim) + " audio=" + std::to_string(d.audio_dim) +
                      " fps=" + format_double(pair.fps) + " attitude=" + std::string(to_string(pair.attitude)) +
                      " length=" + std::to_string(pair.length()) + " listener=" + std::to_string(pair.listener_id) +
                      "\n";
    append_values(out, pair.identity.data(), pair.identity.size());
    for (std::size_t k = 0; k < pair.length(); ++k) {
        append_values(out, pair.speaker_motion.row(k).data(), d.coeff_dim());
        append_values(out, pair.speaker_audio.row(k).data(), d.audio_dim);
        append_values(out, pair.listener.row(k).data(), d.coeff_dim());
    }
    return out;
}

DialoguePair decode_sequence(const std::string& bytes) {
    if (bytes.compare(0, 4, "LSEQ") != 0) throw ParseError("not a sequence file", 0);
    if (bytes.compare(0, kMagic.size(), kMagic) != 0 || bytes.size() <= kMagic.size() ||
        bytes[kMagic.size()] != ' ') {
        throw ParseError("unsupported sequence format version (expected LSEQ1)", 4);
    }
    const std::size_t eol = bytes.find('\n');
    if (eol == std::string::npos || eol > kMaxHeader) throw ParseError("malformed header: no line terminator", 0);

    std::map<std::string, std::string> fields;
    std::istringstream header(bytes.substr(kMagic.size(), eol - kMagic.size()));
    std::string token;
    while (header >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0) throw ParseError("malformed header field '" + token + "'", 0);
        fields[token.substr(0, eq)] = token.substr(eq + 1);
    }

    DialoguePair pair;
    pair.dims.expr_dim = parse_size(fields, "expr", 0);
    pair.dims.identity_dim = parse_size(fields, "identity", 0);
    pair.dims.audio_dim = parse_size(fields, "audio", 0);
    const std::size_t n = parse_size(fields, "length", 0);
    pair.listener_id = static_cast<std::uint32_t>(parse_size(fields, "listener", 0));
    if (!fields.count("attitude") || !fields.count("fps")) throw ParseError("malformed header: missing fields", 0);
    try {
        pair.attitude = parse_attitude(fields["attitude"]);
    } catch (const ConfigError&) {
        throw ParseError("malformed header: unknown attitude '" + fields["attitude"] + "'", 0);
    }
    {
        const auto& s = fields["fps"];
        auto res = std::from_chars(s.data(), s.data() + s.size(), pair.fps);
        if (res.ec != std::errc() || !(pair.fps > 0.0)) throw ParseError("malformed header: bad fps", 0);
    }
    if (n == 0 || pair.dims.identity_dim == 0 || pair.dims.audio_dim == 0) {
        throw ParseError("malformed header: zero dimension", 0);
    }

    const auto& d = pair.dims;
    const std::size_t body = eol + 1;
    const std::size_t id_bytes = d.identity_dim * sizeof(double);
    const std::size_t frame_values = 2 * d.coeff_dim() + d.audio_dim;
    const std::size_t frame_bytes = frame_values * sizeof(double);
    if (bytes.size() < body + id_bytes) throw ParseError("file truncated inside identity vector", bytes.size());
    const std::size_t available = bytes.size() - body - id_bytes;
    if (available < n * frame_bytes) {
        const std::size_t frame = available / frame_bytes;
        throw ParseError("file truncated in frame " + std::to_string(frame) + " of " + std::to_string(n),
                         body + id_bytes + frame * frame_bytes);
    }
    if (available > n * frame_bytes) throw ParseError("trailing bytes after last frame", body + id_bytes + n * frame_bytes);

    const char* p = bytes.data() + body;
    auto take = [&p](double* dst, std::size_t count) {
        std::memcpy(dst, p, count * sizeof(double));
        p += count * sizeof(double);
    };
    pair.identity = NumArray({d.identity_dim});
    take(pair.identity.data(), d.identity_dim);
    pair.speaker_motion = NumArray({n, d.coeff_dim()});
    pair.speaker_audio = NumArray({n, d.audio_dim});
    pair.listener = NumArray({n, d.coeff_dim()});
    for (std::size_t k = 0; k < n; ++k) {
        take(pair.speaker_motion.row(k).data(), d.coeff_dim());
        take(pair.speaker_audio.row(k).data(), d.audio_dim);
        take(pair.listener.row(k).data(), d.coeff_dim());
    }
    return pair;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_sequence(const std::filesystem::path& path, const DialoguePair& pair) {
    write_file(path, encode_sequence(pair));
}

DialoguePair read_sequence(const std::filesystem::path& path) {
    try {
        return decode_sequence(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.offset());
    }
}

void write_csv(const std::filesystem::path& path, const DialoguePair& pair) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    const auto& d = pair.dims;
    out << "frame";
    for (const char* who : {"speaker", "listener"}) {
        for (const char* a : {"pitch", "yaw", "roll"}) out << ',' << who << '_' << a;
        for (std::size_t j = 0; j < d.expr_dim; ++j) out << ',' << who << "_exp" << j;
        for (const char* t : {"tx", "ty", "tz"}) out << ',' << who << '_' << t;
    }
    out << ",energy\n";
    for (std::size_t k = 0; k < pair.length(); ++k) {
        out << k;
        for (double v : pair.speaker_motion.row(k)) out << ',' << format_double(v);
        for (double v : pair.listener.row(k)) out << ',' << format_double(v);
        out << ',' << format_double(pair.speaker_audio(k, 0)) << '\n';
    }
}

}  // namespace ldif::data
