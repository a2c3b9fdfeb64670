#pragma once

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace epcag {

inline constexpr const char* kReportSchema = "epcag-lab/1";

/// 17 significant digits (round-trips every double); non-finite values as nan / inf / -inf.
std::string format_real(double x);

/// Current UTC time as YYYYMMDDTHHMMSSZ.
std::string utc_stamp();

/// Lowercase, with anything outside [a-z0-9._-] replaced by '-'.
std::string file_token(std::string_view s);

/// JSON number, or null for NaN and infinities.
nlohmann::json json_real(double x);

using CsvRow = std::vector<std::string>;

/// Artifact files named <command>-<problem>-<stamp>[-<part>].<ext> in one directory.
class ArtifactWriter {
public:
    /// Creates `dir` when missing; throws Error when it cannot be created.
    ArtifactWriter(std::filesystem::path dir, std::string command, std::string problem, std::string stamp);

    std::filesystem::path path(const std::string& ext, const std::string& part = "") const;
    std::filesystem::path write_csv(const CsvRow& header, const std::vector<CsvRow>& rows,
                                    const std::string& part = "") const;
    /// Adds the common envelope fields (schema, command, problem, timestamp) and writes the report.
    std::filesystem::path write_json(nlohmann::json body) const;

    const std::string& command() const { return command_; }
    const std::string& problem() const { return problem_; }
    const std::string& stamp() const { return stamp_; }

private:
    std::filesystem::path dir_;
    std::string command_;
    std::string problem_;
    std::string stamp_;
};

}  // namespace epcag
