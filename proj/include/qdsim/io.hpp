#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace qdsim {

// 9 significant digits, the fixture round-trip format for CSV output.
std::string format_sig9(double v);

// Full-precision double formatting for JSON payloads.
std::string format_full(double v);

// Write-then-rename so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// FNV-1a 64-bit, hex string; used to fingerprint input fixtures in run records.
std::string fnv1a64_hex(const std::string& bytes);

// Directory containing the in-repo fixtures (falls back to the build-time
// source dir when the relative path does not exist).
std::filesystem::path default_fixture_dir();

}  // namespace qdsim
