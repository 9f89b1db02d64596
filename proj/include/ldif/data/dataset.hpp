#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ldif/data/sequence.hpp"
#include "ldif/data/synth.hpp"
#include "ldif/rng.hpp"

namespace ldif::data {

/// How many pairs to generate and with which lengths. Attitudes cycle
/// positive, neutral, negative by global pair index, so `count` pairs starting
/// at a multiple of 3 hold count/3 pairs per attitude.
struct DatasetSpec {
    std::size_t count = 0;
    std::size_t length_min = 100;
    std::size_t length_max = 300;
    std::uint32_t listeners = 20;
    /// Global index of the first pair. Splits generated from the same seed
    /// with disjoint index ranges never share a pair.
    std::size_t first_index = 0;
};

struct ManifestEntry {
    std::string id;  // file stem, e.g. "0007"
    Attitude attitude = Attitude::neutral;
    std::size_t length = 0;
    std::uint32_t listener_id = 0;
};

/// Pair `index` of the dataset defined by (synth, spec, seed). Pure function
/// of its arguments.
DialoguePair make_pair(const SynthConfig& synth, const DatasetSpec& spec, std::uint64_t seed, std::size_t index);

/// Writes pairs/NNNN.lseq and manifest.tsv (columns id, attitude, length,
/// listener) into `dir`. Refuses a non-empty directory unless `force`, in
/// which case only the previous pairs/ and manifest.tsv are replaced.
std::vector<ManifestEntry> write_dataset(const std::filesystem::path& dir, const SynthConfig& synth,
                                         const DatasetSpec& spec, std::uint64_t seed, bool force);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);

/// All pairs listed in the manifest, in manifest order.
std::vector<DialoguePair> load_dataset(const std::filesystem::path& dir);

/// One training example: a window of a dialogue pair.
struct TrainingWindow {
    NumArray speaker_motion;  // [window, D]
    NumArray speaker_audio;   // [window, A]
    NumArray listener;        // [window, D]
    NumArray identity;        // [D_id]
    Attitude attitude = Attitude::neutral;
};

struct WindowRef {
    std::size_t pair = 0;
    std::size_t start = 0;
};

TrainingWindow extract_window(const DialoguePair& pair, std::size_t start, std::size_t window);

/// Shuffled mini-batches of windows. Every epoch is a partition of all
/// windows of all pairs; the last batch may be smaller.
class WindowBatcher {
   public:
    WindowBatcher(std::vector<DialoguePair> pairs, std::size_t window, std::size_t stride, std::size_t batch);
    /// Loads every pair of a dataset directory; an empty dataset is a DataError.
    static WindowBatcher from_directory(const std::filesystem::path& dir, std::size_t window, std::size_t stride,
                                        std::size_t batch);

    std::size_t window_count() const noexcept { return refs_.size(); }
    std::size_t batches_per_epoch() const noexcept { return (refs_.size() + batch_ - 1) / batch_; }
    const std::vector<WindowRef>& windows() const noexcept { return refs_; }
    const std::vector<DialoguePair>& pairs() const noexcept { return pairs_; }

    /// Batches of window references for one epoch, shuffled with `rng`.
    std::vector<std::vector<WindowRef>> epoch(Rng& rng) const;
    TrainingWindow materialize(const WindowRef& ref) const;

   private:
    std::vector<DialoguePair> pairs_;
    std::size_t window_, batch_;
    std::vector<WindowRef> refs_;
};

}  // namespace ldif::data
