#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace treejudge::cache {

struct HtmlDocument {
  std::string title;
  std::string text;                 // visible body text, one block per line
  std::vector<std::string> frames;  // iframe src attributes, document order
};

namespace html_detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string decode_entities(std::string_view s) {
  static const std::map<std::string, unsigned long, std::less<>> named = {
      {"amp", '&'},      {"lt", '<'},        {"gt", '>'},        {"quot", '"'},      {"apos", '\''},
      {"nbsp", 0xA0},    {"mdash", 0x2014},  {"ndash", 0x2013},  {"hellip", 0x2026}, {"copy", 0xA9},
      {"reg", 0xAE},     {"trade", 0x2122},  {"rsquo", 0x2019},  {"lsquo", 0x2018},  {"ldquo", 0x201C},
      {"rdquo", 0x201D}, {"middot", 0xB7},   {"bull", 0x2022},   {"euro", 0x20AC},   {"pound", 0xA3}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    std::string_view name = s.substr(i + 1, semi - i - 1);
    unsigned long cp = 0;
    bool ok = false;
    if (!name.empty() && name[0] == '#') {
      try {
        std::size_t used = 0;
        if (name.size() > 1 && (name[1] == 'x' || name[1] == 'X')) {
          cp = std::stoul(std::string(name.substr(2)), &used, 16);
          ok = used == name.size() - 2;
        } else {
          cp = std::stoul(std::string(name.substr(1)), &used, 10);
          ok = used == name.size() - 1;
        }
      } catch (const std::exception&) {
        ok = false;
      }
    } else if (auto it = named.find(name); it != named.end()) {
      cp = it->second;
      ok = true;
    }
    if (!ok) {
      out.push_back('&');
      continue;
    }
    append_utf8(out, cp == 0xA0 ? ' ' : cp);
    i = semi;
  }
  return out;
}

struct Tag {
  std::string name;
  bool closing = false;
  std::map<std::string, std::string> attrs;
};

inline Tag parse_tag(std::string_view body) {
  Tag t;
  std::size_t i = 0;
  if (i < body.size() && body[i] == '/') {
    t.closing = true;
    ++i;
  }
  std::size_t start = i;
  while (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i])) && body[i] != '/') ++i;
  t.name = lower(body.substr(start, i - start));
  while (i < body.size()) {
    while (i < body.size() && (std::isspace(static_cast<unsigned char>(body[i])) || body[i] == '/')) ++i;
    std::size_t ns = i;
    while (i < body.size() && body[i] != '=' && !std::isspace(static_cast<unsigned char>(body[i])) && body[i] != '/') ++i;
    std::string name = lower(body.substr(ns, i - ns));
    if (name.empty()) break;
    std::string value;
    if (i < body.size() && body[i] == '=') {
      ++i;
      if (i < body.size() && (body[i] == '"' || body[i] == '\'')) {
        char q = body[i++];
        std::size_t vs = i;
        while (i < body.size() && body[i] != q) ++i;
        value = std::string(body.substr(vs, i - vs));
        if (i < body.size()) ++i;
      } else {
        std::size_t vs = i;
        while (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i]))) ++i;
        value = std::string(body.substr(vs, i - vs));
      }
    }
    t.attrs[name] = decode_entities(value);
  }
  return t;
}

inline bool is_block(const std::string& name) {
  static const char* const kBlocks[] = {"p",       "div",     "br",      "li",         "ul",     "ol",
                                        "h1",      "h2",      "h3",      "h4",         "h5",     "h6",
                                        "tr",      "table",   "section", "article",    "header", "footer",
                                        "nav",     "main",    "aside",   "blockquote", "pre",    "hr",
                                        "form",    "dd",      "dt",      "dl",         "figure", "figcaption",
                                        "address", "details", "summary", "noscript",   "body",   "title"};
  return std::find_if(std::begin(kBlocks), std::end(kBlocks), [&](const char* b) { return name == b; }) !=
         std::end(kBlocks);
}

inline std::size_t find_ci(std::string_view hay, std::string_view needle, std::size_t from) {
  auto it = std::search(hay.begin() + static_cast<std::ptrdiff_t>(from), hay.end(), needle.begin(), needle.end(),
                        [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) ==
                                                    std::tolower(static_cast<unsigned char>(b)); });
  return it == hay.end() ? std::string_view::npos : static_cast<std::size_t>(it - hay.begin());
}

// Collapses runs of spaces per line and drops blank lines.
inline std::string tidy(const std::string& raw) {
  std::string out;
  std::string line;
  auto flush = [&] {
    auto b = line.find_first_not_of(' ');
    if (b != std::string::npos) {
      auto e = line.find_last_not_of(' ');
      if (!out.empty()) out.push_back('\n');
      out += line.substr(b, e - b + 1);
    }
    line.clear();
  };
  bool space = false;
  for (char c : raw) {
    if (c == '\n') {
      flush();
      space = false;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
      if (!space) line.push_back(' ');
      space = true;
    } else {
      line.push_back(c);
      space = false;
    }
  }
  flush();
  return out;
}

}  // namespace html_detail

// Extracts visible text the way a renderer without scripting would show
// it: script/style/template bodies dropped, <noscript> fallbacks kept,
// block elements on their own lines.
inline HtmlDocument extract_html(std::string_view html) {
  using namespace html_detail;
  HtmlDocument doc;
  std::string raw;
  std::string title;
  bool in_title = false;
  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      auto next = html.find('<', i);
      auto chunk = html.substr(i, next == std::string_view::npos ? std::string_view::npos : next - i);
      std::string decoded = decode_entities(chunk);
      for (auto& c : decoded) {
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
      }
      (in_title ? title : raw) += decoded;
      if (next == std::string_view::npos) break;
      i = next;
      continue;
    }
    if (html.compare(i, 4, "<!--") == 0) {
      auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    if (html.compare(i, 2, "<!") == 0 || html.compare(i, 2, "<?") == 0) {
      auto end = html.find('>', i);
      i = end == std::string_view::npos ? html.size() : end + 1;
      continue;
    }
    auto end = html.find('>', i);
    if (end == std::string_view::npos) break;
    Tag tag = parse_tag(html.substr(i + 1, end - i - 1));
    i = end + 1;
    if (tag.name.empty()) continue;

    if (!tag.closing && (tag.name == "script" || tag.name == "style" || tag.name == "template")) {
      auto close = find_ci(html, "</" + tag.name, i);
      if (close == std::string_view::npos) break;
      auto gt = html.find('>', close);
      i = gt == std::string_view::npos ? html.size() : gt + 1;
      continue;
    }
    if (tag.name == "title") {
      in_title = !tag.closing;
      continue;
    }
    if (tag.name == "iframe" && !tag.closing) {
      if (auto it = tag.attrs.find("src"); it != tag.attrs.end() && !it->second.empty()) {
        doc.frames.push_back(it->second);
      }
    }
    if (is_block(tag.name)) {
      raw.push_back('\n');
    } else if (tag.name == "td" || tag.name == "th") {
      raw.push_back(' ');
    }
  }
  doc.title = tidy(title);
  doc.text = tidy(raw);
  return doc;
}

}  // namespace treejudge::cache
