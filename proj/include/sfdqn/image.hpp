#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace sfdqn {

// Sensor frame geometry is fixed: the camera emits 640x480 RGB, the network
// and the contact metric consume a 64x48 grayscale downsample (10x10 block
// mean), so one tactile pixel covers a 10x10 patch of sensor pixels.
inline constexpr int kRawWidth = 640;
inline constexpr int kRawHeight = 480;
inline constexpr int kRawChannels = 3;
inline constexpr int kTactileWidth = 64;
inline constexpr int kTactileHeight = 48;
inline constexpr int kTactilePixels = kTactileWidth * kTactileHeight;  // 3072
inline constexpr int kBlockSize = kRawWidth / kTactileWidth;           // 10

struct RawImage {
    // Interleaved RGB, row-major, 8 bits per channel.
    std::vector<std::uint8_t> data = std::vector<std::uint8_t>(
        static_cast<std::size_t>(kRawWidth) * kRawHeight * kRawChannels, 0);

    std::uint8_t& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * kRawWidth + x) * kRawChannels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * kRawWidth + x) * kRawChannels + c];
    }
};

struct TactileImage {
    std::array<std::uint8_t, kTactilePixels> pixels{};

    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * kTactileWidth + x]; }
    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * kTactileWidth + x]; }

    bool operator==(const TactileImage&) const = default;
};

struct BinaryContactMask {
    std::array<bool, kTactilePixels> on{};

    bool& at(int x, int y) { return on[static_cast<std::size_t>(y) * kTactileWidth + x]; }
    bool at(int x, int y) const { return on[static_cast<std::size_t>(y) * kTactileWidth + x]; }

    int count() const;
};

// Grayscale (rounded channel mean) then 10x10 block mean with round-half-up.
// Both stages are integer-exact, so the result is reproducible bit-for-bit.
TactileImage preprocess(const RawImage& raw);

// mask[p] = |img[p] - background[p]| > tau (strict).
BinaryContactMask subtract_threshold(const TactileImage& img, const TactileImage& background,
                                     int tau);

// Per-mille of set pixels: 1000 * count / 3072, carried as a real value.
double contact_rate(const BinaryContactMask& mask);

// Background frame plus threshold; the per-session contact metric.
struct ContactPipeline {
    TactileImage background;
    int tau = 20;

    double contact_rate_of(const TactileImage& img) const {
        return contact_rate(subtract_threshold(img, background, tau));
    }
};

// Binary PGM (P5), 64x48, maxval 255.
void save_pgm(const TactileImage& img, const std::filesystem::path& path);
TactileImage load_pgm(const std::filesystem::path& path);

// Mask rendered as {0, 255} for visual inspection.
void save_pgm(const BinaryContactMask& mask, const std::filesystem::path& path);

}  // namespace sfdqn
