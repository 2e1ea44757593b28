#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tas/pseudolabel.hpp"
#include "tas/segcore.hpp"
#include "tas/tensor.hpp"

// File formats used by the command-line tool. Every reader throws IoError
// naming the offending path and line; every writer replaces its target
// atomically (write to a sibling temp file, then rename).
namespace tas::io {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& contents);
std::string read_file(const fs::path& path);
// Lines without trailing '\r'; a final empty line is dropped.
std::vector<std::string> read_lines(const fs::path& path);

// One class name per line. A line "name*" marks the background class.
ClassCatalog read_catalog(const fs::path& path);
void write_catalog(const fs::path& path, const ClassCatalog& catalog);

// One class name per frame.
FrameLabeling read_frame_labels(const fs::path& path, const ClassCatalog& catalog);
void write_frame_labels(const fs::path& path, const FrameLabeling& labels, const ClassCatalog& catalog);

// "name<TAB>duration" per segment.
Segmentation read_segments(const fs::path& path, const ClassCatalog& catalog);
std::string format_segments(const Segmentation& seg, const ClassCatalog& catalog);
void write_segments(const fs::path& path, const Segmentation& seg, const ClassCatalog& catalog);

// One class name per line.
Transcript read_transcript(const fs::path& path, const ClassCatalog& catalog);
void write_transcript(const fs::path& path, const Transcript& tr, const ClassCatalog& catalog);

// "frame<TAB>name" per timestamp, 0-indexed frames.
pseudolabel::TimestampAnnotation read_timestamps(const fs::path& path, const ClassCatalog& catalog);
void write_timestamps(const fs::path& path, const pseudolabel::TimestampAnnotation& ts, const ClassCatalog& catalog);

// Binary: "TASF", u32 T, u32 d, then T*d float32, all little-endian,
// row-major. Files ending in .csv hold one comma-separated frame per line.
FeatureSequence read_features(const fs::path& path);
void write_features(const fs::path& path, const FeatureSequence& feats);

// "key=value" lines; blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> read_key_values(const fs::path& path);
std::string format_key_values(const std::map<std::string, std::string>& kv);

}  // namespace tas::io
