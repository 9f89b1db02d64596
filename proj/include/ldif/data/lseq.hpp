#pragma once

#include <filesystem>
#include <string>

#include "ldif/data/sequence.hpp"

namespace ldif::data {

/// LSEQ1 sequence file.
///
/// A single text header line
///
///   LSEQ1 expr=<E> identity=<D_id> audio=<A> fps=<fps> attitude=<name> length=<n> listener=<id>\n
///
/// followed by little-endian 64-bit floats: the identity vector (D_id values),
/// then for each frame the speaker coefficients (6+E), the speaker audio (A)
/// and the listener coefficients (6+E).
std::string encode_sequence(const DialoguePair& pair);
DialoguePair decode_sequence(const std::string& bytes);

void write_sequence(const std::filesystem::path& path, const DialoguePair& pair);
DialoguePair read_sequence(const std::filesystem::path& path);

/// Human-readable per-frame export (not read back).
void write_csv(const std::filesystem::path& path, const DialoguePair& pair);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace ldif::data
