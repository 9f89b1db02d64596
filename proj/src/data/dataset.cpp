#include "ldif/data/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ldif/data/lseq.hpp"
#include "ldif/error.hpp"
#include "ldif/pipeline/windows.hpp"

namespace fs = std::filesystem;

namespace ldif::data {

namespace {

std::string pair_stem(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04zu", index);
    return buf;
}

constexpr Attitude kCycle[] = {Attitude::positive, Attitude::neutral, Attitude::negative};

}  // namespace

DialoguePair make_pair(const SynthConfig& synth, const DatasetSpec& spec, std::uint64_t seed, std::size_t index) {
    if (spec.listeners == 0) throw ConfigError("dataset: listener count must be positive");
    if (spec.length_min < synth.min_length || spec.length_max < spec.length_min) {
        throw ConfigError("dataset: need " + std::to_string(synth.min_length) + " <= length_min <= length_max");
    }
    const Rng master(seed);
    Rng rng = master.derive("pair/" + std::to_string(index));
    const auto lid = static_cast<std::uint32_t>(rng.uniform_int(0, spec.listeners - 1));
    Rng lrng = master.derive("listener/" + std::to_string(lid));
    const Listener listener = draw_listener(lrng, lid, synth.dims);
    const auto length = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(spec.length_min),
                                                                 static_cast<std::int64_t>(spec.length_max)));
    return gen_pair(rng, length, kCycle[index % 3], listener, synth);
}

std::vector<ManifestEntry> write_dataset(const fs::path& dir, const SynthConfig& synth, const DatasetSpec& spec,
                                         std::uint64_t seed, bool force) {
    if (spec.count == 0) throw ConfigError("empty dataset requested");
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' exists and is not a directory");
        if (!fs::is_empty(dir)) {
            if (!force) {
                throw IoError("output directory '" + dir.string() + "' is not empty; pass --force to overwrite");
            }
            fs::remove_all(dir / "pairs");
            fs::remove(dir / "manifest.tsv");
        }
    }
    fs::create_directories(dir / "pairs");

    std::vector<ManifestEntry> manifest;
    for (std::size_t i = 0; i < spec.count; ++i) {
        const std::size_t index = spec.first_index + i;
        const DialoguePair pair = make_pair(synth, spec, seed, index);
        ManifestEntry entry{pair_stem(index), pair.attitude, pair.length(), pair.listener_id};
        write_sequence(dir / "pairs" / (entry.id + ".lseq"), pair);
        manifest.push_back(entry);
    }
    std::ostringstream out;
    out << "id\tattitude\tlength\tlistener\n";
    for (const auto& e : manifest) {
        out << e.id << '\t' << to_string(e.attitude) << '\t' << e.length << '\t' << e.listener_id << '\n';
    }
    write_file(dir / "manifest.tsv", out.str());
    return manifest;
}

std::vector<ManifestEntry> read_manifest(const fs::path& dir) {
    const fs::path path = dir / "manifest.tsv";
    if (!fs::exists(path)) {
        throw DataError("no dataset at '" + dir.string() + "' (missing manifest.tsv); run gen-data first");
    }
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);
    if (line != "id\tattitude\tlength\tlistener") throw DataError(path.string() + ": unexpected manifest header");
    std::vector<ManifestEntry> entries;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        ManifestEntry e;
        std::string attitude;
        if (!(fields >> e.id >> attitude >> e.length >> e.listener_id)) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed manifest row");
        }
        e.attitude = parse_attitude(attitude);
        entries.push_back(e);
    }
    return entries;
}

std::vector<DialoguePair> load_dataset(const fs::path& dir) {
    std::vector<DialoguePair> pairs;
    for (const auto& e : read_manifest(dir)) {
        DialoguePair pair = read_sequence(dir / "pairs" / (e.id + ".lseq"));
        if (pair.length() != e.length || pair.attitude != e.attitude || pair.listener_id != e.listener_id) {
            throw DataError("pair " + e.id + " disagrees with manifest.tsv");
        }
        pairs.push_back(std::move(pair));
    }
    if (pairs.empty()) throw DataError("dataset at '" + dir.string() + "' is empty");
    return pairs;
}

TrainingWindow extract_window(const DialoguePair& pair, std::size_t start, std::size_t window) {
    if (start + window > pair.length()) {
        throw IndexError("window [" + std::to_string(start) + ", " + std::to_string(start + window) +
                         ") exceeds pair length " + std::to_string(pair.length()));
    }
    TrainingWindow w;
    w.speaker_motion = pair.speaker_motion.slice_rows(start, window);
    w.speaker_audio = pair.speaker_audio.slice_rows(start, window);
    w.listener = pair.listener.slice_rows(start, window);
    w.identity = pair.identity;
    w.attitude = pair.attitude;
    return w;
}

WindowBatcher::WindowBatcher(std::vector<DialoguePair> pairs, std::size_t window, std::size_t stride,
                             std::size_t batch)
    : pairs_(std::move(pairs)), window_(window), batch_(batch) {
    if (pairs_.empty()) throw DataError("batch_iter: no pairs");
    if (batch_ == 0) throw ConfigError("batch_iter: batch size must be positive");
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
        for (std::size_t s : pipeline::split_windows(pairs_[p].length(), window, stride)) refs_.push_back({p, s});
    }
}

WindowBatcher WindowBatcher::from_directory(const fs::path& dir, std::size_t window, std::size_t stride,
                                            std::size_t batch) {
    return WindowBatcher(load_dataset(dir), window, stride, batch);
}

std::vector<std::vector<WindowRef>> WindowBatcher::epoch(Rng& rng) const {
    std::vector<WindowRef> order = refs_;
    std::shuffle(order.begin(), order.end(), rng.engine());
    std::vector<std::vector<WindowRef>> batches;
    for (std::size_t i = 0; i < order.size(); i += batch_) {
        const std::size_t end = std::min(order.size(), i + batch_);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

TrainingWindow WindowBatcher::materialize(const WindowRef& ref) const {
    return extract_window(pairs_.at(ref.pair), ref.start, window_);
}

}  // namespace ldif::data
