#include "nlc/image.hpp"

#include <cmath>
#include <fstream>

#include "nlc/errors.hpp"

#ifdef NLC_WITH_PNG
#error "PNG backend is not implemented; build with NLC_WITH_PNG=OFF"
#endif

namespace nlc {

namespace {

// whitespace and '#' comments between PPM header tokens
void skip_separators(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            while (in.good() && in.get() != '\n') {
            }
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            in.get();
        } else {
            return;
        }
    }
}

int64_t read_header_int(std::istream& in, const std::string& what) {
    skip_separators(in);
    int64_t v = 0;
    in >> v;
    check_data(in.good() && v >= 0, "ppm: malformed " + what);
    return v;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Tensor load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check_data(in.good(), "ppm: cannot open " + path);
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    check_data(in.good() && magic == "P6", "ppm: not a binary P6 file: " + path);
    const int64_t w = read_header_int(in, "width");
    const int64_t h = read_header_int(in, "height");
    const int64_t maxval = read_header_int(in, "maxval");
    check_data(w >= 1 && h >= 1, "ppm: bad dimensions in " + path);
    check_data(maxval == 255, "ppm: only maxval 255 is supported: " + path);
    in.get();  // the single separator byte after maxval

    std::vector<uint8_t> raw(static_cast<size_t>(w * h * 3));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    check_data(in.gcount() == static_cast<std::streamsize>(raw.size()),
               "ppm: truncated pixel data in " + path);

    std::vector<double> v(raw.size());
    const int64_t plane = w * h;
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            for (int64_t c = 0; c < 3; ++c)
                v[static_cast<size_t>(c * plane + y * w + x)] =
                    raw[static_cast<size_t>((y * w + x) * 3 + c)] / 255.0;
    return Tensor({1, 3, h, w}, std::move(v));
}

void save_ppm(const std::string& path, const Tensor& image) {
    check_arg(image.shape().size() == 4 && image.shape()[0] == 1 && image.shape()[1] == 3,
              "ppm: image must be (1,3,H,W)");
    const int64_t h = image.shape()[2], w = image.shape()[3];
    const int64_t plane = w * h;
    const auto v = image.values();
    std::vector<uint8_t> raw(static_cast<size_t>(w * h * 3));
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            for (int64_t c = 0; c < 3; ++c) {
                double p = v[c * plane + y * w + x];
                p = p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
                raw[static_cast<size_t>((y * w + x) * 3 + c)] =
                    static_cast<uint8_t>(std::lround(p * 255.0));
            }
    std::ofstream out(path, std::ios::binary);
    check_data(out.good(), "ppm: cannot write " + path);
    out << "P6\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    check_data(out.good(), "ppm: write failed for " + path);
}

Tensor load_image(const std::string& path) {
    if (ends_with(path, ".ppm") || ends_with(path, ".PPM")) return load_ppm(path);
    check_data(!ends_with(path, ".png") && !ends_with(path, ".PNG"),
               "image: this build has no PNG backend, use PPM: " + path);
    check_data(false, "image: unsupported extension: " + path);
    return {};
}

void save_image(const std::string& path, const Tensor& image) {
    if (ends_with(path, ".ppm") || ends_with(path, ".PPM")) return save_ppm(path, image);
    check_data(!ends_with(path, ".png") && !ends_with(path, ".PNG"),
               "image: this build has no PNG backend, use PPM: " + path);
    check_data(false, "image: unsupported extension: " + path);
}

}  // namespace nlc
