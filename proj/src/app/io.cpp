#include "mgtopo/app/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <regex>
#include <sstream>

namespace mgtopo::app {

namespace {

namespace fs = std::filesystem;

std::string base64_encode(const std::vector<unsigned char>& bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), int(bytes.size()));
    out.resize(std::size_t(n));
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw IoError("base64 block length is not a multiple of 4");
    std::vector<unsigned char> out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), int(text.size()));
    if (n < 0) throw IoError("invalid base64 data");
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(std::size_t(n) - pad);
    return out;
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) b.push_back(static_cast<unsigned char>(v >> s));
}

void put_u64(std::vector<unsigned char>& b, std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) b.push_back(static_cast<unsigned char>(v >> s));
}

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void write_file(const fs::path& path, const void* data, std::size_t n) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(static_cast<const char*>(data), std::streamsize(n));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string attribute(const std::string& tag, const std::string& name, const fs::path& path) {
    const std::regex re(name + "=\"([^\"]*)\"");
    std::smatch m;
    if (!std::regex_search(tag, m, re)) throw IoError(path.string() + ": missing attribute " + name);
    return m[1];
}

}  // namespace

void write_vti(const fs::path& path, const StructuredGrid& g, std::span<const double> rho, VtiEncoding enc) {
    if (rho.size() != g.num_elements()) throw std::invalid_argument("write_vti: density count mismatch");
    std::ostringstream os;
    os.precision(9);
    const double h = g.h();
    os << "<?xml version=\"1.0\"?>\n"
       << "<VTKFile type=\"ImageData\" version=\"1.0\" byte_order=\"LittleEndian\" header_type=\"UInt32\">\n"
       << "  <ImageData WholeExtent=\"0 " << g.nelx() << " 0 " << g.nely() << " 0 " << g.nelz()
       << "\" Origin=\"0 0 0\" Spacing=\"" << h << " " << h << " " << h << "\">\n"
       << "    <Piece Extent=\"0 " << g.nelx() << " 0 " << g.nely() << " 0 " << g.nelz() << "\">\n"
       << "      <CellData Scalars=\"density\">\n"
       << "        <DataArray type=\"Float32\" Name=\"density\" NumberOfComponents=\"1\" format=\""
       << (enc == VtiEncoding::ascii ? "ascii" : "binary") << "\">\n";
    if (enc == VtiEncoding::ascii) {
        for (std::size_t e = 0; e < rho.size(); ++e) os << (e % 8 == 0 ? "          " : " ") << float(rho[e])
                                                         << (e % 8 == 7 || e + 1 == rho.size() ? "\n" : "");
    } else {
        std::vector<unsigned char> header, data;
        put_u32(header, std::uint32_t(4 * rho.size()));
        data.reserve(4 * rho.size());
        for (double r : rho) put_u32(data, std::bit_cast<std::uint32_t>(float(r)));
        os << "          " << base64_encode(header) << base64_encode(data) << "\n";
    }
    os << "        </DataArray>\n"
       << "      </CellData>\n"
       << "    </Piece>\n"
       << "  </ImageData>\n"
       << "</VTKFile>\n";
    const std::string s = os.str();
    write_file(path, s.data(), s.size());
}

VtiField read_vti(const fs::path& path) {
    const std::string text = read_file(path);
    VtiField f;
    const auto img = text.find("<ImageData");
    if (img == std::string::npos) throw IoError(path.string() + ": not an ImageData file");
    const std::string img_tag = text.substr(img, text.find('>', img) - img);
    std::istringstream ext(attribute(img_tag, "WholeExtent", path));
    std::array<int, 6> e{};
    for (auto& v : e) ext >> v;
    if (!ext) throw IoError(path.string() + ": malformed WholeExtent");
    for (int a = 0; a < 3; ++a) f.cells[a] = e[2 * a + 1] - e[2 * a];
    std::istringstream sp(attribute(img_tag, "Spacing", path));
    sp >> f.spacing;

    const auto arr = text.find("<DataArray");
    if (arr == std::string::npos) throw IoError(path.string() + ": no DataArray");
    const auto arr_end = text.find('>', arr);
    const std::string arr_tag = text.substr(arr, arr_end - arr);
    if (attribute(arr_tag, "Name", path) != "density") throw IoError(path.string() + ": first array is not density");
    const auto close = text.find("</DataArray>", arr_end);
    if (close == std::string::npos) throw IoError(path.string() + ": unterminated DataArray");
    const std::string body = text.substr(arr_end + 1, close - arr_end - 1);
    const std::size_t n = std::size_t(f.cells[0]) * f.cells[1] * f.cells[2];

    if (attribute(arr_tag, "format", path) == "ascii") {
        std::istringstream in(body);
        float v;
        while (in >> v) f.density.push_back(v);
    } else {
        std::string b64;
        for (char c : body)
            if (!std::isspace(static_cast<unsigned char>(c))) b64.push_back(c);
        if (b64.size() < 8) throw IoError(path.string() + ": binary block too short");
        const auto header = base64_decode(b64.substr(0, 8));
        const auto data = base64_decode(b64.substr(8));
        if (header.size() != 4 || get_u32(header.data()) != data.size())
            throw IoError(path.string() + ": binary header does not match the payload");
        for (std::size_t i = 0; i + 4 <= data.size(); i += 4)
            f.density.push_back(std::bit_cast<float>(get_u32(data.data() + i)));
    }
    if (f.density.size() != n)
        throw IoError(path.string() + ": expected " + std::to_string(n) + " cell values, found " +
                      std::to_string(f.density.size()));
    return f;
}

void save_checkpoint(const fs::path& path, const StructuredGrid& g, const OptState& s) {
    if (s.densities.size() != g.num_elements() || s.u.size() != g.num_dofs())
        throw std::invalid_argument("save_checkpoint: state does not match the grid");
    if (s.iteration < 0) throw std::invalid_argument("save_checkpoint: negative iteration");
    std::vector<unsigned char> b;
    b.reserve(24 + 8 * (s.densities.size() + s.u.size()));
    for (char c : {'T', 'P', 'F', '1'}) b.push_back(static_cast<unsigned char>(c));
    put_u32(b, kCheckpointVersion);
    put_u32(b, std::uint32_t(g.nelx()));
    put_u32(b, std::uint32_t(g.nely()));
    put_u32(b, std::uint32_t(g.nelz()));
    put_u32(b, std::uint32_t(s.iteration));
    for (double v : s.densities) put_u64(b, std::bit_cast<std::uint64_t>(v));
    for (double v : s.u) put_u64(b, std::bit_cast<std::uint64_t>(v));
    try {
        write_file(path, b.data(), b.size());
    } catch (const IoError& e) {
        throw CheckpointError(e.what());
    }
}

OptState load_checkpoint(const fs::path& path, const StructuredGrid& g) {
    std::string raw;
    try {
        raw = read_file(path);
    } catch (const IoError& e) {
        throw CheckpointError(e.what());
    }
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    const std::string where = "checkpoint " + path.string() + ": ";
    if (raw.size() < 24) throw CheckpointError(where + "truncated header (" + std::to_string(raw.size()) + " bytes)");
    if (std::memcmp(p, "TPF1", 4) != 0) throw CheckpointError(where + "bad magic");
    const std::uint32_t version = get_u32(p + 4);
    if (version != kCheckpointVersion)
        throw CheckpointError(where + "unsupported version " + std::to_string(version));
    const std::array<std::uint32_t, 3> dims{get_u32(p + 8), get_u32(p + 12), get_u32(p + 16)};
    if (dims[0] != std::uint32_t(g.nelx()) || dims[1] != std::uint32_t(g.nely()) || dims[2] != std::uint32_t(g.nelz()))
        throw CheckpointError(where + "grid " + std::to_string(dims[0]) + "x" + std::to_string(dims[1]) + "x" +
                              std::to_string(dims[2]) + " does not match the configured " + std::to_string(g.nelx()) +
                              "x" + std::to_string(g.nely()) + "x" + std::to_string(g.nelz()));
    const std::size_t nel = g.num_elements(), ndof = g.num_dofs();
    const std::size_t expect = 24 + 8 * (nel + ndof);
    if (raw.size() != expect)
        throw CheckpointError(where + (raw.size() < expect ? "truncated" : "trailing data") + " (" +
                              std::to_string(raw.size()) + " bytes, expected " + std::to_string(expect) + ")");
    OptState s;
    s.iteration = int(get_u32(p + 20));
    s.densities.resize(nel);
    s.u.resize(ndof);
    const unsigned char* q = p + 24;
    for (auto& v : s.densities) v = std::bit_cast<double>(get_u64(q)), q += 8;
    for (auto& v : s.u) v = std::bit_cast<double>(get_u64(q)), q += 8;
    for (double r : s.densities)
        if (!(r >= 0.0 && r <= 1.0)) throw CheckpointError(where + "density outside [0, 1]");
    return s;
}

CsvLog::CsvLog(const fs::path& path, int keep_through) : path_(path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::vector<std::string> kept;
    if (keep_through >= 0 && fs::exists(path)) {
        std::istringstream in(read_file(path));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (std::stoi(line.substr(0, line.find(','))) <= keep_through) kept.push_back(line);
        }
    }
    out_.open(path, std::ios::trunc);
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    out_ << kCsvHeader << "\n";
    for (const auto& l : kept) out_ << l << "\n";
    out_.flush();
}

void CsvLog::append(const IterationRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d,%.17g,%.6f,%zu\n", r.iter, r.compliance, r.volume,
                  r.change, r.cg_iters, r.cg_residual, r.wall_s, r.aux_scalars);
    out_ << buf;
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_.string());
}

}  // namespace mgtopo::app
