#include "refref/image.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace refref {

namespace {

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32_be(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

void write_chunk(std::ofstream& f, const char type[4], const std::vector<uint8_t>& payload) {
    std::vector<uint8_t> head;
    put_u32_be(head, static_cast<uint32_t>(payload.size()));
    f.write(reinterpret_cast<const char*>(head.data()), 4);
    f.write(type, 4);
    if (!payload.empty())
        f.write(reinterpret_cast<const char*>(payload.data()),
                static_cast<std::streamsize>(payload.size()));
    uLong crc = crc32(0, reinterpret_cast<const Bytef*>(type), 4);
    if (!payload.empty()) crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
    std::vector<uint8_t> tail;
    put_u32_be(tail, static_cast<uint32_t>(crc));
    f.write(reinterpret_cast<const char*>(tail.data()), 4);
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    return pb <= pc ? b : c;
}

}  // namespace

void write_png(const Image& image, const std::string& path) {
    if (image.channels != 1 && image.channels != 3)
        throw std::runtime_error("write_png supports 1 or 3 channels");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");

    const uint8_t signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    f.write(reinterpret_cast<const char*>(signature), 8);

    std::vector<uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<uint32_t>(image.width));
    put_u32_be(ihdr, static_cast<uint32_t>(image.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(image.channels == 3 ? 2 : 0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(f, "IHDR", ihdr);

    size_t stride = static_cast<size_t>(image.width) * image.channels;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * image.height);
    for (int y = 0; y < image.height; ++y) {
        raw.push_back(0);  // filter: none
        for (size_t i = 0; i < stride; ++i) {
            float v = image.data[static_cast<size_t>(y) * stride + i];
            v = std::clamp(v, 0.0f, 1.0f);
            raw.push_back(static_cast<uint8_t>(std::lround(v * 255.0f)));
        }
    }

    uLongf dest_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> compressed(dest_len);
    if (compress2(compressed.data(), &dest_len, raw.data(), static_cast<uLong>(raw.size()),
                  Z_BEST_SPEED) != Z_OK)
        throw std::runtime_error("png deflate failed");
    compressed.resize(dest_len);
    write_chunk(f, "IDAT", compressed);
    write_chunk(f, "IEND", {});
    if (!f) throw std::runtime_error("write failed: " + path);
}

Image read_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    const uint8_t signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), signature, 8) != 0)
        throw std::runtime_error("not a PNG file: " + path);

    uint32_t width = 0, height = 0;
    int channels = 0;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        uint32_t len = get_u32_be(&bytes[pos]);
        std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
        const uint8_t* payload = &bytes[pos + 8];
        if (pos + 12 + len > bytes.size()) throw std::runtime_error("truncated PNG: " + path);
        if (type == "IHDR") {
            width = get_u32_be(payload);
            height = get_u32_be(payload + 4);
            int depth = payload[8], color = payload[9];
            if (depth != 8 || payload[12] != 0)
                throw std::runtime_error("unsupported PNG format: " + path);
            channels = color == 0 ? 1 : color == 2 ? 3 : color == 6 ? 4 : 0;
            if (channels == 0) throw std::runtime_error("unsupported PNG color type");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (width == 0 || height == 0 || idat.empty())
        throw std::runtime_error("malformed PNG: " + path);

    size_t stride = static_cast<size_t>(width) * channels;
    std::vector<uint8_t> raw((stride + 1) * height);
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) !=
            Z_OK ||
        raw_len != raw.size())
        throw std::runtime_error("png inflate failed: " + path);

    // Undo per-row filters.
    std::vector<uint8_t> pixels(stride * height);
    int bpp = channels;
    for (uint32_t y = 0; y < height; ++y) {
        uint8_t filter = raw[y * (stride + 1)];
        const uint8_t* src = &raw[y * (stride + 1) + 1];
        uint8_t* dst = &pixels[y * stride];
        const uint8_t* up = y > 0 ? &pixels[(y - 1) * stride] : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            int a = i >= static_cast<size_t>(bpp) ? dst[i - bpp] : 0;
            int b = up ? up[i] : 0;
            int c = (up && i >= static_cast<size_t>(bpp)) ? up[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw std::runtime_error("unsupported PNG filter");
            }
            dst[i] = static_cast<uint8_t>(v);
        }
    }

    int out_channels = channels == 4 ? 3 : channels;
    Image image(static_cast<int>(width), static_cast<int>(height), out_channels);
    for (uint32_t y = 0; y < height; ++y)
        for (uint32_t x = 0; x < width; ++x)
            for (int ch = 0; ch < out_channels; ++ch)
                image.at(static_cast<int>(x), static_cast<int>(y), ch) =
                    pixels[y * stride + x * channels + ch] / 255.0f;
    return image;
}

void write_pfm(const Image& image, const std::string& path) {
    if (image.channels != 1 && image.channels != 3)
        throw std::runtime_error("write_pfm supports 1 or 3 channels");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << (image.channels == 3 ? "PF" : "Pf") << "\n"
      << image.width << " " << image.height << "\n"
      << "-1.0\n";  // negative scale = little-endian
    // PFM rows are bottom-to-top.
    size_t stride = static_cast<size_t>(image.width) * image.channels;
    for (int y = image.height - 1; y >= 0; --y)
        f.write(reinterpret_cast<const char*>(&image.data[y * stride]),
                static_cast<std::streamsize>(stride * sizeof(float)));
    if (!f) throw std::runtime_error("write failed: " + path);
}

Image read_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string header;
    int width, height;
    double scale;
    f >> header >> width >> height >> scale;
    f.get();  // single whitespace after the scale line
    if ((header != "PF" && header != "Pf") || width <= 0 || height <= 0 || scale >= 0)
        throw std::runtime_error("unsupported PFM file: " + path);
    Image image(width, height, header == "PF" ? 3 : 1);
    size_t stride = static_cast<size_t>(width) * image.channels;
    for (int y = height - 1; y >= 0; --y)
        f.read(reinterpret_cast<char*>(&image.data[y * stride]),
               static_cast<std::streamsize>(stride * sizeof(float)));
    if (!f) throw std::runtime_error("truncated PFM file: " + path);
    return image;
}

}  // namespace refref
