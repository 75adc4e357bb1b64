#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "dq/database.hpp"
#include "dq/modelgate.hpp"

namespace dq::testing {

namespace fs = std::filesystem;

std::string fixture_path(std::string_view name);
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, std::string_view content);

// Fresh, empty directory unique to this process.
fs::path scratch_dir(std::string_view name);

// Minimal valid 1x1 PNG; `shade` varies the pixel so files differ.
void write_png(const fs::path& path, unsigned char shade = 0);

Database memory_db(std::string_view script);

struct OlistFixture {
    fs::path dir;
    std::string db_path;
    std::string url;
};

// Six tables, twelve products; p01-p03 have PNG photos. p04 passes the
// structured filter of kFurnitureQuestion but has no photo.
OlistFixture make_mini_olist(const fs::path& dir);

inline constexpr std::string_view kFurnitureQuestion =
    "Show me furniture priced under 100 whose photo shows a wooden piece";
inline constexpr std::string_view kDeliveredQuestion = "How many orders were delivered?";

// All text parts joined by newlines.
std::string user_text(const ResolvedRequest& request);

// Deterministic stand-in for the model on the mini Olist scenarios.
std::string olist_model(const ResolvedRequest& request);

std::shared_ptr<ModelBackend> olist_backend();

}  // namespace dq::testing
