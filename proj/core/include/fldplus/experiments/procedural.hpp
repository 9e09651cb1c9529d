#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "fldplus/features/image.hpp"

namespace fldplus::experiments {

// Deterministic stand-in for a photo corpus: a smooth two-colour background
// with low-frequency texture, a handful of soft-edged ellipses and bars, and
// fine sensor-like grain. Integer pixel values, like a decoded file.
features::Image procedural_image(std::size_t size, std::uint64_t seed);

// Occluding random discs (the "dead leaves" model): radii with density ~ 1/r^3
// between 1 and size * 5/8 pixels, uniform colours, painted front to back,
// plus N(0, 2) grain. Sharp edges at every scale, like photos; blur and noise
// move these images off their natural statistics.
features::Image dead_leaves_image(std::size_t size, std::uint64_t seed);

enum class CorpusKind { kProcedural, kDeadLeaves };
std::string_view to_string(CorpusKind kind) noexcept;  // "procedural", "dead-leaves"
CorpusKind parse_corpus_kind(std::string_view name);

features::Image corpus_image(CorpusKind kind, std::size_t size, std::uint64_t seed);

// Writes img_00000.png ... into dir; image i uses derive_seed(seed, "image/i").
std::vector<std::filesystem::path> write_corpus(const std::filesystem::path& dir, CorpusKind kind,
                                                std::size_t count, std::size_t size,
                                                std::uint64_t seed, std::size_t workers = 1);

// The images write_corpus would write, in memory.
std::vector<features::Image> make_corpus(CorpusKind kind, std::size_t first, std::size_t count,
                                         std::size_t size, std::uint64_t seed,
                                         std::size_t workers = 1);

}  // namespace fldplus::experiments
