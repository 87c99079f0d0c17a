#pragma once

#include <cstdio>
#include <optional>
#include <string>

#include "helios/sim/channel.hpp"
#include "helios/sim/response_model.hpp"
#include "helios/sim/rgb_setting.hpp"

namespace helios::service {

inline std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace detail {

inline std::string fmt_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string page(const std::string& title, const std::string& body) {
  return "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" + title +
         "</title>\n<style>body{font-family:sans-serif;margin:2em}table{border-collapse:collapse}"
         "td,th{border:1px solid #999;padding:2px 8px;text-align:right}.error{color:#b00}</style>"
         "</head><body>\n<h1>" + title + "</h1>\n" + body + "</body></html>\n";
}

inline std::string number_input(const char* name, double value) {
  return std::string("<label>") + name + " <input type=\"number\" name=\"" + name +
         "\" min=\"0\" max=\"1\" step=\"0.01\" value=\"" + fmt_fraction(value) + "\"></label>\n";
}

inline std::string error_block(const std::string& error) {
  return error.empty() ? std::string() : "<p class=\"error\">" + html_escape(error) + "</p>\n";
}

}  // namespace detail

inline std::string gm_page(std::optional<RgbSetting> x, std::optional<Reading> r, const std::string& error) {
  std::string body = detail::error_block(error);
  body += "<form method=\"get\" action=\"/gm\">\n" + detail::number_input("G", x ? x->g() : 0.0) +
          "<button type=\"submit\">Measure</button>\n</form>\n";
  if (x && r) {
    body += "<p>G = " + detail::fmt_fraction(x->g()) + " &rarr; 515nm = <b id=\"w515\">" +
            std::to_string((*r)[Channel::W515]) + "</b></p>\n";
  }
  return detail::page("Green machine", body);
}

inline std::string rgb_page(std::optional<RgbSetting> x, std::optional<Reading> r, const std::string& error) {
  std::string body = detail::error_block(error);
  const RgbSetting shown = x.value_or(RgbSetting{});
  body += "<form method=\"get\" action=\"/rgb\">\n" + detail::number_input("R", shown.r()) +
          detail::number_input("G", shown.g()) + detail::number_input("B", shown.b()) +
          "<button type=\"submit\">Measure</button>\n</form>\n";
  if (r) {
    body += "<table>\n<tr><th>channel</th><th>counts</th></tr>\n";
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      body += "<tr><td>" + std::string(kWireNames[c]) + "</td><td>" + std::to_string(r->counts[c]) + "</td></tr>\n";
    }
    body += "</table>\n";
  }
  return detail::page("RGB machine", body);
}

inline std::string index_page() {
  return detail::page("helios instrument",
                      "<ul>\n<li><a href=\"/gm\">/gm</a> green machine form</li>\n"
                      "<li><a href=\"/rgb\">/rgb</a> RGB machine form</li>\n"
                      "<li>/api?R=&amp;G=&amp;B= JSON measurement</li>\n"
                      "<li><a href=\"/stats\">/stats</a> usage counters</li>\n</ul>\n");
}

}  // namespace helios::service
