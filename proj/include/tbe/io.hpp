#pragma once
// File formats: matrix JSON, time-tag streams (binary/CSV), histogram CSV,
// mode-field CSV, projection-record JSON, config JSON, spectra CSV.

#include <string>
#include <vector>

#include "tbe/coincidence.hpp"
#include "tbe/photonics.hpp"
#include "tbe/qcore.hpp"
#include "tbe/simulator.hpp"
#include "tbe/tomography.hpp"

namespace tbe::io {

// {"re": 4x4, "im": 4x4}, row-major, fixed basis order
std::string matrix_to_json(const Mat4& m, int indent = 1);
Mat4 matrix_from_json(const std::string& text);
void write_matrix(const std::string& path, const Mat4& m);
Mat4 read_matrix(const std::string& path);

// binary stream: 16-byte header (8-byte magic "TBTAGSTR", u32 version, u32
// reserved) then little-endian records (u8 channel, u64 timestamp_ps)
void write_stream_bin(const std::string& path, const std::vector<TimeTagEvent>& ev);
std::vector<TimeTagEvent> read_stream_bin(const std::string& path);
void write_stream_csv(const std::string& path, const std::vector<TimeTagEvent>& ev);
std::vector<TimeTagEvent> read_stream_csv(const std::string& path);
// dispatch on extension: .bin -> binary, otherwise CSV
std::vector<TimeTagEvent> read_stream(const std::string& path);

void write_histogram_csv(const std::string& path, const CoincidenceHistogram2D& h);
CoincidenceHistogram2D read_histogram_csv(const std::string& path);

void write_modefield_csv(const std::string& path, const ModeField& f);
ModeField read_modefield_csv(const std::string& path);

std::string records_to_json(const ProjectionRecords& records);
ProjectionRecords records_from_json(const std::string& text);
void write_records(const std::string& path, const ProjectionRecords& records);
ProjectionRecords read_records(const std::string& path);

std::string config_to_json(const ExperimentConfig& cfg);
// throws std::invalid_argument with the offending field name
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig read_config(const std::string& path);
void write_config(const std::string& path, const ExperimentConfig& cfg);

std::string tomography_result_to_json(const TomographyResult& r);
void write_tomography_result(const std::string& path, const TomographyResult& r);

// two-column CSV: lambda_nm, value_db (header line optional)
Spectrum read_spectrum_csv(const std::string& path);
void write_spectrum_csv(const std::string& path, const Spectrum& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace tbe::io
