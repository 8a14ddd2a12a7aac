#pragma once
// Synthetic corpora and suite files shared by the unit and acceptance tests.
// Everything here is deterministic for a fixed (n, seed).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "surgbench/datamodel.hpp"
#include "surgbench/harness.hpp"
#include "surgbench/pipeline.hpp"

namespace surgbench::testsupport {

std::filesystem::path data_dir();  // the repo's data/ directory

VocabTables load_default_vocab();

std::vector<SampleRecord> make_phase_records(std::size_t n);
std::vector<SampleRecord> make_action_records(std::size_t n);
std::vector<SampleRecord> make_triplet_records(std::size_t n);
std::vector<SampleRecord> make_box_records(std::size_t n);  // one labeled box each
std::vector<SampleRecord> make_vqa_records(std::size_t n);
std::vector<SampleRecord> make_cvs_records(std::size_t n);

// Records carrying several tasks each (phase, step, instrument, action,
// triplet, cvs rotating), for the pipeline tests.
std::vector<SampleRecord> make_multitask_records(std::size_t n);

// Writes the six benchmark corpora plus suite.toml under dir; returns the
// suite path. per_dataset records each, suite seed and budget as given.
std::string write_benchmark_fixture(const std::filesystem::path& dir, std::size_t per_dataset,
                                    std::uint64_t suite_seed, std::size_t budget);

std::filesystem::path unique_temp_dir(const std::string& tag);

}  // namespace surgbench::testsupport
