#pragma once

#include <zlib.h>

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "treejudge/cache/html_text.hpp"
#include "treejudge/core/error.hpp"

namespace treejudge::cache {

struct PdfDocument {
  std::vector<std::string> pages;  // extracted text per page, document order

  std::string text() const {
    std::string out;
    for (const auto& p : pages) {
      if (p.empty()) continue;
      if (!out.empty()) out += "\n\n";
      out += p;
    }
    return out;
  }
};

inline bool looks_like_pdf(std::string_view bytes) {
  auto start = bytes.find_first_not_of(" \t\r\n");
  return start != std::string_view::npos && bytes.substr(start, 5) == "%PDF-";
}

namespace pdf_detail {

inline bool is_delim(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '<' || c == '>' || c == '[' ||
         c == ']' || c == '{' || c == '}' || c == '/' || c == '%';
}

inline std::string inflate(std::string_view in) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw DocumentError("zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  std::string out;
  char buf[16384];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = ::inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      // Truncated streams still yield whatever decoded cleanly.
      out.append(buf, sizeof buf - zs.avail_out);
      break;
    }
    out.append(buf, sizeof buf - zs.avail_out);
    if (zs.avail_in == 0 && rc != Z_STREAM_END && zs.avail_out != 0) break;
  }
  inflateEnd(&zs);
  return out;
}

inline std::string ascii85(std::string_view in) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    char c = in[i];
    if (c == '~') break;
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') throw DocumentError("bad ASCII85 data");
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((tuple >> s) & 0xFF));
      tuple = 0;
      count = 0;
    }
  }
  if (count > 1) {
    for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
    for (int k = 0; k < count - 1; ++k) out.push_back(static_cast<char>((tuple >> (24 - 8 * k)) & 0xFF));
  }
  return out;
}

inline std::string ascii_hex(std::string_view in) {
  std::string out;
  int hi = -1;
  for (char c : in) {
    if (c == '>') break;
    if (!std::isxdigit(static_cast<unsigned char>(c))) continue;
    int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : (std::tolower(c) - 'a' + 10);
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<char>(hi * 16 + v));
      hi = -1;
    }
  }
  if (hi >= 0) out.push_back(static_cast<char>(hi * 16));
  return out;
}

// cp1252 0x80..0x9F; zero entries fall back to '?'.
inline constexpr unsigned short kWinAnsiHigh[32] = {
    0x20AC, 0,      0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0,      0x017D, 0,      0,      0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2014, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0,      0x017E, 0x0178};

inline void append_winansi(std::string& out, std::string_view bytes) {
  for (unsigned char c : bytes) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0xA0) {
      unsigned short cp = kWinAnsiHigh[c - 0x80];
      html_detail::append_utf8(out, cp ? cp : '?');
    } else {
      html_detail::append_utf8(out, c == 0xA0 ? ' ' : c);
    }
  }
}

struct Object {
  std::string_view dict;    // text between "obj" and "stream"/"endobj"
  std::string_view stream;  // raw stream bytes, empty if none
};

// Dictionary value lookup by key name ("/Kids"); returns the raw text up to
// the next key at the same nesting level.
inline std::string_view dict_value(std::string_view dict, std::string_view key) {
  std::size_t pos = 0;
  while ((pos = dict.find(key, pos)) != std::string_view::npos) {
    std::size_t after = pos + key.size();
    if (after < dict.size() && !is_delim(dict[after])) {
      pos = after;
      continue;
    }
    std::size_t i = after;
    while (i < dict.size() && std::isspace(static_cast<unsigned char>(dict[i]))) ++i;
    std::size_t start = i;
    int depth = 0;
    while (i < dict.size()) {
      char c = dict[i];
      if (c == '[' || (c == '<' && i + 1 < dict.size() && dict[i + 1] == '<')) {
        ++depth;
        i += c == '<' ? 2 : 1;
        continue;
      }
      if (c == ']' || (c == '>' && i + 1 < dict.size() && dict[i + 1] == '>')) {
        if (depth == 0) break;
        --depth;
        i += c == '>' ? 2 : 1;
        if (depth == 0) break;
        continue;
      }
      if (depth == 0 && c == '/' && i > start) break;
      ++i;
    }
    return dict.substr(start, i - start);
  }
  return {};
}

inline std::vector<int> refs(std::string_view value) {
  std::vector<int> out;
  std::vector<long> nums;
  std::size_t i = 0;
  while (i < value.size()) {
    char c = value[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < value.size() && std::isdigit(static_cast<unsigned char>(value[j]))) ++j;
      nums.push_back(std::stol(std::string(value.substr(i, j - i))));
      i = j;
    } else if (c == 'R' && nums.size() >= 2) {
      out.push_back(static_cast<int>(nums[nums.size() - 2]));
      nums.clear();
      ++i;
    } else {
      if (!std::isspace(static_cast<unsigned char>(c))) nums.clear();
      ++i;
    }
  }
  return out;
}

inline std::map<int, Object> scan_objects(std::string_view pdf) {
  std::map<int, Object> objects;
  std::size_t pos = 0;
  while ((pos = pdf.find(" obj", pos)) != std::string_view::npos) {
    // Walk back over "<num> <gen>".
    std::size_t p = pos;
    auto back_digits = [&](std::size_t& q) {
      std::size_t e = q;
      while (q > 0 && std::isdigit(static_cast<unsigned char>(pdf[q - 1]))) --q;
      return q < e;
    };
    if (!back_digits(p) || p == 0 || pdf[p - 1] != ' ') {
      pos += 4;
      continue;
    }
    --p;
    std::size_t num_end = p;
    if (!back_digits(p)) {
      pos += 4;
      continue;
    }
    int num = std::stoi(std::string(pdf.substr(p, num_end - p)));
    std::size_t body = pos + 4;
    auto end = pdf.find("endobj", body);
    if (end == std::string_view::npos) break;
    Object obj;
    auto st = pdf.find("stream", body);
    if (st != std::string_view::npos && st < end) {
      obj.dict = pdf.substr(body, st - body);
      std::size_t data = st + 6;
      if (data < pdf.size() && pdf[data] == '\r') ++data;
      if (data < pdf.size() && pdf[data] == '\n') ++data;
      auto es = pdf.rfind("endstream", end);
      if (es == std::string_view::npos || es < data) es = end;
      std::size_t len = es - data;
      auto declared = dict_value(obj.dict, "/Length");
      if (!declared.empty() && refs(declared).empty()) {
        try {
          std::size_t n = std::stoul(std::string(declared));
          if (data + n <= es) len = n;
        } catch (const std::exception&) {
        }
      }
      obj.stream = pdf.substr(data, len);
    } else {
      obj.dict = pdf.substr(body, end - body);
    }
    objects[num] = obj;
    pos = end + 6;
  }
  return objects;
}

inline std::string decode_stream(const Object& obj) {
  std::string data(obj.stream);
  auto filter = dict_value(obj.dict, "/Filter");
  std::vector<std::string> filters;
  for (std::size_t i = 0; i < filter.size(); ++i) {
    if (filter[i] != '/') continue;
    std::size_t j = i + 1;
    while (j < filter.size() && !is_delim(filter[j])) ++j;
    filters.emplace_back(filter.substr(i + 1, j - i - 1));
    i = j - 1;
  }
  for (const auto& f : filters) {
    if (f == "FlateDecode" || f == "Fl") {
      data = inflate(data);
    } else if (f == "ASCII85Decode" || f == "A85") {
      data = ascii85(data);
    } else if (f == "ASCIIHexDecode" || f == "AHx") {
      data = ascii_hex(data);
    } else {
      return {};  // image codecs and the like carry no text
    }
  }
  return data;
}

inline std::string read_literal(std::string_view s, std::size_t& i) {
  std::string out;
  int depth = 1;
  ++i;  // '('
  while (i < s.size()) {
    char c = s[i++];
    if (c == '\\' && i < s.size()) {
      char e = s[i++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case '\r':
          if (i < s.size() && s[i] == '\n') ++i;
          break;
        case '\n': break;
        default:
          if (e >= '0' && e <= '7') {
            int v = e - '0';
            for (int k = 0; k < 2 && i < s.size() && s[i] >= '0' && s[i] <= '7'; ++k) v = v * 8 + (s[i++] - '0');
            out.push_back(static_cast<char>(v & 0xFF));
          } else {
            out.push_back(e);
          }
      }
    } else if (c == '(') {
      ++depth;
      out.push_back(c);
    } else if (c == ')') {
      if (--depth == 0) break;
      out.push_back(c);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

// Runs the text-showing operators of one content stream.
inline std::string content_text(std::string_view s) {
  std::string out;
  std::vector<std::string> strings;  // operands that are strings
  std::vector<double> numbers;
  std::string pending;                // text of the current line
  auto newline = [&] {
    if (!pending.empty()) {
      if (!out.empty()) out.push_back('\n');
      out += pending;
      pending.clear();
    }
  };
  auto show = [&](const std::string& bytes) { append_winansi(pending, bytes); };

  std::vector<std::pair<bool, std::string>> array;  // (is_string, value) inside [...]
  bool in_array = false;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '%') {
      while (i < s.size() && s[i] != '\n' && s[i] != '\r') ++i;
    } else if (c == '(') {
      auto str = read_literal(s, i);
      if (in_array) array.emplace_back(true, std::move(str)); else strings.push_back(std::move(str));
    } else if (c == '<' && i + 1 < s.size() && s[i + 1] != '<') {
      auto close = s.find('>', i);
      auto str = ascii_hex(s.substr(i + 1, close == std::string_view::npos ? std::string_view::npos : close - i - 1));
      i = close == std::string_view::npos ? s.size() : close + 1;
      if (in_array) array.emplace_back(true, std::move(str)); else strings.push_back(std::move(str));
    } else if (c == '[') {
      in_array = true;
      array.clear();
      ++i;
    } else if (c == ']') {
      in_array = false;
      ++i;
    } else if (c == '<' || c == '>') {
      i += 2;  // dictionary delimiters in inline images or marked content
    } else if (c == '/') {
      ++i;
      while (i < s.size() && !is_delim(s[i])) ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      double v = 0;
      try {
        v = std::stod(std::string(s.substr(i, j - i)));
      } catch (const std::exception&) {
      }
      if (in_array) array.emplace_back(false, std::to_string(v)); else numbers.push_back(v);
      i = j;
    } else {
      std::size_t j = i;
      while (j < s.size() && !is_delim(s[j])) ++j;
      if (j == i) j = i + 1;
      std::string_view op = s.substr(i, j - i);
      i = j;
      if (op == "Tj") {
        if (!strings.empty()) show(strings.back());
      } else if (op == "'" || op == "\"") {
        newline();
        if (!strings.empty()) show(strings.back());
      } else if (op == "TJ") {
        for (auto& [is_str, v] : array) {
          if (is_str) {
            show(v);
          } else if (std::stod(v) < -200 && !pending.empty() && pending.back() != ' ') {
            pending.push_back(' ');
          }
        }
        array.clear();
      } else if (op == "T*" || op == "ET") {
        newline();
      } else if (op == "Td" || op == "TD") {
        if (numbers.size() >= 2 && numbers[numbers.size() - 1] != 0) {
          newline();
        } else if (!pending.empty() && pending.back() != ' ') {
          pending.push_back(' ');
        }
      } else if (op == "Tm") {
        newline();
      } else if (op == "BI") {
        auto ei = s.find("EI", i);
        i = ei == std::string_view::npos ? s.size() : ei + 2;
      }
      strings.clear();
      numbers.clear();
    }
  }
  newline();
  return out;
}

inline void collect_pages(const std::map<int, Object>& objs, int id, std::vector<int>& pages, std::set<int>& seen) {
  if (!seen.insert(id).second) return;
  auto it = objs.find(id);
  if (it == objs.end()) return;
  auto dict = it->second.dict;
  auto kids = dict_value(dict, "/Kids");
  if (!kids.empty()) {
    for (int k : refs(kids)) collect_pages(objs, k, pages, seen);
  } else if (!dict_value(dict, "/Contents").empty()) {
    pages.push_back(id);
  }
}

}  // namespace pdf_detail

// Text extraction for simple PDFs: uncompressed or Flate/ASCII85/hex-filtered
// content streams with standard 8-bit fonts. Pages follow the /Kids order of
// the page tree. Object streams and CID fonts are not decoded.
inline PdfDocument extract_pdf(std::string_view bytes) {
  using namespace pdf_detail;
  if (!looks_like_pdf(bytes)) throw DocumentError("not a PDF document");
  auto objs = scan_objects(bytes);

  std::optional<int> root_pages;
  for (const auto& [id, obj] : objs) {
    auto type = dict_value(obj.dict, "/Type");
    if (type.substr(0, 8) == "/Catalog") {
      auto r = refs(dict_value(obj.dict, "/Pages"));
      if (!r.empty()) root_pages = r.front();
      break;
    }
  }
  std::vector<int> page_ids;
  std::set<int> seen;
  if (root_pages) collect_pages(objs, *root_pages, page_ids, seen);

  PdfDocument doc;
  for (int pid : page_ids) {
    std::string text;
    for (int cid : refs(dict_value(objs.at(pid).dict, "/Contents"))) {
      auto it = objs.find(cid);
      if (it == objs.end()) continue;
      auto part = content_text(decode_stream(it->second));
      if (part.empty()) continue;
      if (!text.empty()) text.push_back('\n');
      text += part;
    }
    doc.pages.push_back(std::move(text));
  }
  if (page_ids.empty()) {
    // No usable page tree: fall back to every text-bearing stream.
    for (const auto& [id, obj] : objs) {
      if (obj.stream.empty()) continue;
      auto part = content_text(decode_stream(obj));
      if (!part.empty()) doc.pages.push_back(std::move(part));
    }
  }
  return doc;
}

}  // namespace treejudge::cache
