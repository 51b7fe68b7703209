#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfw/certificates.hpp"
#include "sfw/evaluation.hpp"
#include "sfw/measures.hpp"
#include "sfw/sfw.hpp"

namespace sfw {

/// One localization CSV row: frame,amplitude,x1[,x2,x3].
struct LocalizationRow {
  int frame = 0;
  double amplitude = 0.0;
  Vec position;
};

std::string format_double(double v);  ///< shortest round-trip decimal form

void write_localizations_csv(const std::filesystem::path& path,
                             const std::vector<LocalizationRow>& rows, int dim);
std::vector<LocalizationRow> read_localizations_csv(const std::filesystem::path& path);

/// Group rows by frame index into measures (frames may be empty).
std::vector<DiscreteMeasure> group_by_frame(const std::vector<LocalizationRow>& rows,
                                            int frame_count);

// Flat little-endian binary of 64-bit floats.
// Header: 8-byte magic "SFWFRM01", uint32 M, uint32 frame count.
void write_frames_binary(const std::filesystem::path& path, const std::vector<Vec>& frames);
std::vector<Vec> read_frames_binary(const std::filesystem::path& path);

/// CSV alternative: one row of M values per frame, no header.
void write_frames_csv(const std::filesystem::path& path, const std::vector<Vec>& frames);
std::vector<Vec> read_frames_csv(const std::filesystem::path& path);

/// Reads either format, keyed on the magic bytes.
std::vector<Vec> read_frames_any(const std::filesystem::path& path);

nlohmann::json to_json(const SfwTrace& trace);
nlohmann::json to_json(const NondegeneracyReport& report);
nlohmann::json to_json(const OptimalityReport& report);
nlohmann::json to_json(const FrameScore& score);
nlohmann::json to_json(const AggregateScore& agg);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace sfw
