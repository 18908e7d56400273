#include "citysplat/io/colmap.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/io/atomic_file.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <sstream>

namespace citysplat::io {

namespace fs = std::filesystem;

namespace {

struct ModelInfo {
    int id;
    const char* name;
    int num_params;
};

constexpr ModelInfo kModels[] = {
    {0, "SIMPLE_PINHOLE", 3}, {1, "PINHOLE", 4},          {2, "SIMPLE_RADIAL", 4},
    {3, "RADIAL", 5},         {4, "OPENCV", 8},           {5, "OPENCV_FISHEYE", 8},
    {6, "FULL_OPENCV", 12},   {7, "FOV", 5},              {8, "SIMPLE_RADIAL_FISHEYE", 4},
    {9, "RADIAL_FISHEYE", 5}, {10, "THIN_PRISM_FISHEYE", 12},
};

const ModelInfo* model_by_id(int id) {
    for (const auto& m : kModels) {
        if (m.id == id) {
            return &m;
        }
    }
    return nullptr;
}

struct Intrinsics {
    int width = 0;
    int height = 0;
    double fx = 0, fy = 0, cx = 0, cy = 0;
};

Intrinsics make_intrinsics(const std::string& model, int width, int height, const std::vector<double>& p) {
    Intrinsics in;
    in.width = width;
    in.height = height;
    if (model == "SIMPLE_PINHOLE" && p.size() == 3) {
        in.fx = in.fy = p[0];
        in.cx = p[1];
        in.cy = p[2];
    } else if (model == "PINHOLE" && p.size() == 4) {
        in.fx = p[0];
        in.fy = p[1];
        in.cx = p[2];
        in.cy = p[3];
    } else if (model == "SIMPLE_PINHOLE" || model == "PINHOLE") {
        throw DataError(fmt::format("camera model {} has {} parameters", model, p.size()));
    } else {
        throw DataError(fmt::format("unsupported camera model '{}' (only PINHOLE and SIMPLE_PINHOLE)", model));
    }
    return in;
}

std::vector<std::string> content_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty() && line[0] == '#') {
            continue;
        }
        out.push_back(line);
    }
    return out;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

ColmapImage make_image(std::uint32_t image_id, std::uint32_t camera_id, std::string name,
                       const Intrinsics& in, const Eigen::Quaterniond& q, const Eigen::Vector3d& t) {
    ColmapImage img;
    img.image_id = image_id;
    img.camera_id = camera_id;
    img.name = std::move(name);
    img.view = CameraView::from_pose(in.width, in.height, in.fx, in.fy, in.cx, in.cy, q, t);
    return img;
}

class BinaryReader {
public:
    BinaryReader(std::vector<std::uint8_t> data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

    template <typename T>
    T read() {
        if (pos_ + sizeof(T) > data_.size()) {
            throw DataError(fmt::format("{} is truncated", what_));
        }
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string read_cstring() {
        std::string s;
        for (;;) {
            const char c = read<char>();
            if (c == '\0') {
                return s;
            }
            s.push_back(c);
        }
    }

    void skip(std::size_t n) {
        if (pos_ + n > data_.size()) {
            throw DataError(fmt::format("{} is truncated", what_));
        }
        pos_ += n;
    }

private:
    std::vector<std::uint8_t> data_;
    std::string what_;
    std::size_t pos_ = 0;
};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.insert(out.end(), buf, buf + sizeof(T));
}

Eigen::Quaterniond pose_quaternion(const CameraView& view) {
    Eigen::Quaterniond q(view.rotation_w2c);
    q.normalize();
    if (q.w() < 0) {
        q.coeffs() *= -1.0;
    }
    return q;
}

std::map<std::uint32_t, const CameraView*> unique_cameras(const std::vector<ColmapImage>& images) {
    std::map<std::uint32_t, const CameraView*> cams;
    for (const auto& img : images) {
        cams.emplace(img.camera_id, &img.view);
    }
    return cams;
}

void sort_by_id(std::vector<ColmapImage>& images) {
    std::sort(images.begin(), images.end(),
              [](const ColmapImage& a, const ColmapImage& b) { return a.image_id < b.image_id; });
    for (std::size_t i = 1; i < images.size(); ++i) {
        if (images[i].image_id == images[i - 1].image_id) {
            throw DataError(fmt::format("duplicate image id {}", images[i].image_id));
        }
    }
}

} // namespace

std::vector<ColmapImage> load_colmap_text(const fs::path& dir) {
    std::map<std::uint32_t, Intrinsics> cameras;
    for (const auto& line : content_lines(read_file_text(dir / "cameras.txt"))) {
        if (blank(line)) {
            continue;
        }
        std::istringstream tok(line);
        std::uint32_t id;
        std::string model;
        int w, h;
        tok >> id >> model >> w >> h;
        if (tok.fail()) {
            throw DataError(fmt::format("malformed cameras.txt line '{}'", line));
        }
        std::vector<double> params;
        double v;
        while (tok >> v) {
            params.push_back(v);
        }
        cameras[id] = make_intrinsics(model, w, h, params);
    }

    std::vector<ColmapImage> images;
    const auto lines = content_lines(read_file_text(dir / "images.txt"));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (blank(lines[i])) {
            continue;
        }
        std::istringstream tok(lines[i]);
        std::uint32_t image_id, camera_id;
        double qw, qx, qy, qz, tx, ty, tz;
        std::string name;
        tok >> image_id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> camera_id >> name;
        if (tok.fail()) {
            throw DataError(fmt::format("malformed images.txt line '{}'", lines[i]));
        }
        const auto cam = cameras.find(camera_id);
        if (cam == cameras.end()) {
            throw DataError(fmt::format("image {} references unknown camera {}", image_id, camera_id));
        }
        images.push_back(make_image(image_id, camera_id, name, cam->second, Eigen::Quaterniond(qw, qx, qy, qz),
                                    Eigen::Vector3d(tx, ty, tz)));
        ++i; // points2D line
    }
    sort_by_id(images);
    return images;
}

std::vector<ColmapImage> load_colmap_binary(const fs::path& dir) {
    std::map<std::uint32_t, Intrinsics> cameras;
    {
        BinaryReader in(read_file_bytes(dir / "cameras.bin"), "cameras.bin");
        const auto n = in.read<std::uint64_t>();
        for (std::uint64_t c = 0; c < n; ++c) {
            const auto id = in.read<std::int32_t>();
            const auto model_id = in.read<std::int32_t>();
            const auto w = in.read<std::uint64_t>();
            const auto h = in.read<std::uint64_t>();
            const ModelInfo* model = model_by_id(model_id);
            if (model == nullptr) {
                throw DataError(fmt::format("unsupported camera model id {}", model_id));
            }
            std::vector<double> params(model->num_params);
            for (auto& p : params) {
                p = in.read<double>();
            }
            cameras[static_cast<std::uint32_t>(id)] =
                make_intrinsics(model->name, static_cast<int>(w), static_cast<int>(h), params);
        }
    }

    std::vector<ColmapImage> images;
    BinaryReader in(read_file_bytes(dir / "images.bin"), "images.bin");
    const auto n = in.read<std::uint64_t>();
    for (std::uint64_t k = 0; k < n; ++k) {
        const auto image_id = in.read<std::uint32_t>();
        double q[4], t[3];
        for (double& v : q) {
            v = in.read<double>();
        }
        for (double& v : t) {
            v = in.read<double>();
        }
        const auto camera_id = in.read<std::uint32_t>();
        std::string name = in.read_cstring();
        const auto num_points = in.read<std::uint64_t>();
        in.skip(num_points * (2 * sizeof(double) + sizeof(std::int64_t)));
        const auto cam = cameras.find(camera_id);
        if (cam == cameras.end()) {
            throw DataError(fmt::format("image {} references unknown camera {}", image_id, camera_id));
        }
        images.push_back(make_image(image_id, camera_id, std::move(name), cam->second,
                                    Eigen::Quaterniond(q[0], q[1], q[2], q[3]), Eigen::Vector3d(t[0], t[1], t[2])));
    }
    sort_by_id(images);
    return images;
}

std::vector<ColmapImage> load_colmap(const fs::path& dir) {
    if (fs::exists(dir / "cameras.txt") && fs::exists(dir / "images.txt")) {
        return load_colmap_text(dir);
    }
    if (fs::exists(dir / "cameras.bin") && fs::exists(dir / "images.bin")) {
        return load_colmap_binary(dir);
    }
    throw DataError(fmt::format("{} contains no COLMAP model (cameras/images .txt or .bin)", dir.string()));
}

void write_colmap_text(const fs::path& dir, const std::vector<ColmapImage>& images) {
    std::string cams = "# Camera list with one line of data per camera:\n"
                       "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
    for (const auto& [id, v] : unique_cameras(images)) {
        cams += fmt::format("{} PINHOLE {} {} {:.17g} {:.17g} {:.17g} {:.17g}\n", id, v->width, v->height, v->fx,
                            v->fy, v->cx, v->cy);
    }
    std::string imgs = "# Image list with two lines of data per image:\n"
                       "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
                       "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
    for (const auto& img : images) {
        const auto q = pose_quaternion(img.view);
        const auto& t = img.view.translation_w2c;
        imgs += fmt::format("{} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {} {}\n\n", img.image_id,
                            q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z(), img.camera_id, img.name);
    }
    write_file_atomic(dir / "cameras.txt", cams);
    write_file_atomic(dir / "images.txt", imgs);
}

void write_colmap_binary(const fs::path& dir, const std::vector<ColmapImage>& images) {
    const auto cams = unique_cameras(images);
    std::vector<std::uint8_t> cb;
    put<std::uint64_t>(cb, cams.size());
    for (const auto& [id, v] : cams) {
        put<std::int32_t>(cb, static_cast<std::int32_t>(id));
        put<std::int32_t>(cb, 1);
        put<std::uint64_t>(cb, static_cast<std::uint64_t>(v->width));
        put<std::uint64_t>(cb, static_cast<std::uint64_t>(v->height));
        for (double p : {v->fx, v->fy, v->cx, v->cy}) {
            put<double>(cb, p);
        }
    }
    std::vector<std::uint8_t> ib;
    put<std::uint64_t>(ib, images.size());
    for (const auto& img : images) {
        put<std::uint32_t>(ib, img.image_id);
        const auto q = pose_quaternion(img.view);
        for (double v : {q.w(), q.x(), q.y(), q.z()}) {
            put<double>(ib, v);
        }
        for (int a = 0; a < 3; ++a) {
            put<double>(ib, img.view.translation_w2c[a]);
        }
        put<std::uint32_t>(ib, img.camera_id);
        ib.insert(ib.end(), img.name.begin(), img.name.end());
        ib.push_back(0);
        put<std::uint64_t>(ib, 0);
    }
    write_file_atomic(dir / "cameras.bin", cb);
    write_file_atomic(dir / "images.bin", ib);
}

} // namespace citysplat::io
