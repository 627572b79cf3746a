#include "tarbm/image.hpp"

#include <zlib.h>

#include <cctype>
#include <fstream>
#include <string>

#include "tarbm/errors.hpp"

namespace tarbm {

void write_pgm(std::ostream& out, const Image& image) {
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
}

namespace {

std::string header_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != std::char_traits<char>::eof()) {
        if (c == '#' && tok.empty()) {
            while ((c = in.get()) != std::char_traits<char>::eof() && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

std::size_t header_number(std::istream& in) {
    const std::string tok = header_token(in);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("pgm: bad header field '" + tok + "'");
    return std::stoul(tok);
}

void put_be32(std::string& buf, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

void write_chunk(std::ostream& out, const char* type, const std::string& data) {
    std::string chunk;
    put_be32(chunk, static_cast<std::uint32_t>(data.size()));
    chunk.append(type, 4);
    chunk += data;
    const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(chunk.data() + 4),
                           static_cast<uInt>(chunk.size() - 4));
    put_be32(chunk, static_cast<std::uint32_t>(crc));
    out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
}

}  // namespace

Image read_pgm(std::istream& in) {
    if (header_token(in) != "P5") throw ParseError("pgm: missing P5 magic");
    const std::size_t w = header_number(in);
    const std::size_t h = header_number(in);
    const std::size_t maxval = header_number(in);
    if (maxval != 255) throw ParseError("pgm: maxval must be 255");
    Image img(w, h);
    if (!in.read(reinterpret_cast<char*>(img.pixels.data()),
                 static_cast<std::streamsize>(img.pixels.size())))
        throw ParseError("pgm: truncated pixel data");
    return img;
}

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_pgm(in);
}

void write_png(std::ostream& out, const Image& image) {
    static const char signature[8] = {'\x89', 'P', 'N', 'G', '\r', '\n', '\x1a', '\n'};
    out.write(signature, 8);

    std::string ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(image.width));
    put_be32(ihdr, static_cast<std::uint32_t>(image.height));
    ihdr += std::string{'\x08', '\x00', '\x00', '\x00', '\x00'};  // 8-bit gray
    write_chunk(out, "IHDR", ihdr);

    std::string raw;
    raw.reserve(image.height * (image.width + 1));
    for (std::size_t y = 0; y < image.height; ++y) {
        raw.push_back('\0');  // filter: none
        raw.append(reinterpret_cast<const char*>(image.pixels.data() + y * image.width), image.width);
    }
    uLongf len = compressBound(static_cast<uLong>(raw.size()));
    std::string packed(len, '\0');
    if (compress2(reinterpret_cast<Bytef*>(packed.data()), &len,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  9) != Z_OK)
        throw std::runtime_error("png: zlib compression failed");
    packed.resize(len);
    write_chunk(out, "IDAT", packed);
    write_chunk(out, "IEND", {});
}

void save_image(const Image& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    if (path.extension() == ".png") {
        write_png(out, image);
    } else {
        write_pgm(out, image);
    }
}

}  // namespace tarbm
