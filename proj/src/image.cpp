#include "sfdqn/image.hpp"

#include <fstream>
#include <sstream>

#include "sfdqn/binio.hpp"
#include "sfdqn/errors.hpp"

namespace sfdqn {

int BinaryContactMask::count() const {
    int n = 0;
    for (bool b : on) n += b ? 1 : 0;
    return n;
}

TactileImage preprocess(const RawImage& raw) {
    const std::size_t expected =
        static_cast<std::size_t>(kRawWidth) * kRawHeight * kRawChannels;
    if (raw.data.size() != expected) {
        throw ShapeError("raw frame must be 640x480x3, got " + std::to_string(raw.data.size()) +
                         " bytes");
    }

    // Grayscale: round-half-up of (r+g+b)/3. The channel sum is at most 765,
    // so 32-bit arithmetic is safe throughout.
    std::vector<std::uint16_t> gray(static_cast<std::size_t>(kRawWidth) * kRawHeight);
    for (std::size_t p = 0; p < gray.size(); ++p) {
        const std::uint32_t sum = raw.data[p * 3] + raw.data[p * 3 + 1] + raw.data[p * 3 + 2];
        gray[p] = static_cast<std::uint16_t>((2 * sum + 3) / 6);
    }

    // Non-overlapping 10x10 block mean, round-half-up.
    TactileImage out;
    for (int by = 0; by < kTactileHeight; ++by) {
        for (int bx = 0; bx < kTactileWidth; ++bx) {
            std::uint32_t sum = 0;
            for (int dy = 0; dy < kBlockSize; ++dy) {
                const std::size_t row =
                    static_cast<std::size_t>(by * kBlockSize + dy) * kRawWidth + bx * kBlockSize;
                for (int dx = 0; dx < kBlockSize; ++dx) sum += gray[row + dx];
            }
            out.at(bx, by) =
                static_cast<std::uint8_t>((sum + kBlockSize * kBlockSize / 2) / (kBlockSize * kBlockSize));
        }
    }
    return out;
}

BinaryContactMask subtract_threshold(const TactileImage& img, const TactileImage& background,
                                     int tau) {
    BinaryContactMask mask;
    for (int p = 0; p < kTactilePixels; ++p) {
        const int diff = static_cast<int>(img.pixels[p]) - static_cast<int>(background.pixels[p]);
        mask.on[p] = (diff > tau) || (-diff > tau);
    }
    return mask;
}

double contact_rate(const BinaryContactMask& mask) {
    return 1000.0 * static_cast<double>(mask.count()) / static_cast<double>(kTactilePixels);
}

void save_pgm(const TactileImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open file for writing: " + path.string(), 0);
    out << "P5\n" << kTactileWidth << " " << kTactileHeight << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    if (!out) throw FormatError("short write: " + path.string(), 0);
}

void save_pgm(const BinaryContactMask& mask, const std::filesystem::path& path) {
    TactileImage img;
    for (int p = 0; p < kTactilePixels; ++p) img.pixels[p] = mask.on[p] ? 255 : 0;
    save_pgm(img, path);
}

namespace {

// Reads one PGM header token, skipping whitespace and '#' comments.
std::string next_pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(in.get()));
            return tok;
        }
    }
    return tok;
}

}  // namespace

TactileImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path.string(), 0);

    if (next_pgm_token(in) != "P5") throw FormatError("not a binary PGM (P5): " + path.string(), 0);
    const std::string w = next_pgm_token(in);
    const std::string h = next_pgm_token(in);
    const std::string maxval = next_pgm_token(in);
    if (w != std::to_string(kTactileWidth) || h != std::to_string(kTactileHeight)) {
        throw ShapeError("PGM must be 64x48, got " + w + "x" + h);
    }
    if (maxval != "255") throw FormatError("PGM maxval must be 255", static_cast<std::uint64_t>(in.tellg()));
    in.get();  // single whitespace byte after the header

    TactileImage img;
    in.read(reinterpret_cast<char*>(img.pixels.data()), img.pixels.size());
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw FormatError("truncated PGM pixel data", static_cast<std::uint64_t>(in.gcount()));
    }
    return img;
}

}  // namespace sfdqn
