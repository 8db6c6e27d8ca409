#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "vortexgate/scenario.hpp"

namespace vortexgate {

namespace {

std::uint16_t to_grey(double t)
{
    t = std::clamp(t, 0.0, 1.0);
    return static_cast<std::uint16_t>(std::lround(t * 65535.0));
}

// Largest 1-2-5 length not exceeding a fifth of the field of view.
double scale_bar(double extent)
{
    const double target = extent / 5.0;
    const double decade = std::pow(10.0, std::floor(std::log10(target)));
    for (double m : {5.0, 2.0, 1.0})
        if (m * decade <= target)
            return m * decade;
    return decade;
}

} // namespace

void render_field(const WaveField& f, RenderKind kind, const std::filesystem::path& path)
{
    const int n = f.nx();
    std::vector<std::uint16_t> px(static_cast<std::size_t>(n) * n);
    const auto v = f.values();
    if (kind == RenderKind::Intensity) {
        double peak = 0.0;
        for (const auto& c : v)
            peak = std::max(peak, std::norm(c));
        for (std::size_t i = 0; i < v.size(); ++i)
            px[i] = peak > 0.0 ? to_grey(std::norm(v[i]) / peak) : 0;
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) {
            double a = std::arg(v[i]);
            if (a <= -std::numbers::pi)
                a = std::numbers::pi;
            px[i] = to_grey((a + std::numbers::pi) / (2.0 * std::numbers::pi));
        }
    }

    // Image rows run top to bottom, so +y ends up at the top.
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << n << ' ' << n << "\n65535\n";
    std::vector<char> row(static_cast<std::size_t>(n) * 2);
    for (int iy = n - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < n; ++ix) {
            const std::uint16_t g = px[static_cast<std::size_t>(iy) * n + ix];
            row[2 * ix] = static_cast<char>(g >> 8);
            row[2 * ix + 1] = static_cast<char>(g & 0xff);
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out)
        throw std::runtime_error("failed while writing " + path.string());

    auto side = path;
    side.replace_extension(".txt");
    std::ofstream meta(side);
    if (!meta)
        throw std::runtime_error("cannot write " + side.string());
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "kind = %s\nn = %d\npitch_m = %.17g\nextent_m = %.17g\nz_m = %.17g\nscale_bar_m = %.17g\n",
                  kind == RenderKind::Intensity ? "intensity" : "phase", n, f.pitch(), f.grid().extent, f.z(),
                  scale_bar(f.grid().extent));
    meta << buf;
    if (kind == RenderKind::Intensity)
        meta << "grey = intensity / max intensity\n";
    else
        meta << "grey = (phase + pi) / 2pi, phase in (-pi, pi]\n";
    meta << "orientation = +x right, +y up, axis at pixel (n/2, n/2) from the bottom-left\n";
}

GreyImage read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    in.get();
    if (magic != "P5" || w <= 0 || h <= 0 || maxval != 65535)
        throw std::runtime_error(path.string() + " is not a 16-bit binary PGM");
    GreyImage img{w, h, std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h)};
    std::vector<unsigned char> raw(img.pixels.size() * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in)
        throw std::runtime_error(path.string() + " is truncated");
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    return img;
}

} // namespace vortexgate
