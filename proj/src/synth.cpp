#include <algorithm>
#include <array>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string_view>

#include "citepref/corpus.hpp"

namespace citepref {

namespace {

struct Spec {
  const char* key;
  const char* value;
};

std::string with_article(const std::string& noun) {
  const bool vowel = !noun.empty() && std::string_view("aeiou").find(noun[0]) != std::string_view::npos;
  return (vowel ? "an " : "a ") + noun;
}

struct Category {
  const char* name;     // query vocabulary
  const char* generic;  // replacement noun that avoids the query terms
  const char* slug;
  std::array<Spec, 4> specs;
  const char* claim;    // performance claim
  const char* benefit;  // value proposition
  const char* detail;   // in-depth analysis sentence
  int price;
};

// Fictional catalogue; no real brands.
const std::array<Category, 12> kCategories{{
    {"robot vacuum", "cleaning unit", "robot-vacuum",
     {{{"Suction", "30,000 Pa"}, {"Runtime", "180 minutes"}, {"Dustbin", "0.45 L"}, {"Noise", "62 dB"}}},
     "strong cleaning on carpet and hard floors", "hands-free daily cleaning",
     "Across a six-room test layout it mapped every room on the first run and returned to its dock without help",
     549},
    {"fitness tracker", "wrist unit", "fitness-tracker",
     {{{"Battery life", "9 days"}, {"Display", "1.4 in AMOLED"}, {"Water rating", "5 ATM"}, {"Weight", "28 g"}}},
     "accurate heart-rate and sleep tracking", "long battery life between charges",
     "During a two-week trial its step counts stayed within two percent of a chest strap reference",
     199},
    {"espresso machine", "kitchen unit", "espresso-machine",
     {{{"Pressure", "15 bar"}, {"Water tank", "1.8 L"}, {"Heat-up time", "25 seconds"}, {"Power", "1350 W"}}},
     "consistent shots with rich crema", "cafe-style drinks at home",
     "Over forty pulled shots the extraction time varied by less than three seconds",
     429},
    {"air purifier", "room unit", "air-purifier",
     {{{"CADR", "320 m3/h"}, {"Coverage", "45 m2"}, {"Filter life", "12 months"}, {"Noise", "24 dB"}}},
     "fast removal of dust and pollen", "cleaner air in large rooms",
     "In a sealed test room it cut particle counts by ninety percent within twenty minutes",
     279},
    {"smart speaker", "audio unit", "smart-speaker",
     {{{"Drivers", "2 x 50 mm"}, {"Output power", "40 W"}, {"Standby draw", "1.5 W"}, {"Weight", "1.2 kg"}}},
     "room-filling sound with clear vocals", "hands-free music and voice control",
     "In a living-room test its bass stayed clean at high volume without audible distortion",
     179},
    {"electric toothbrush", "bathroom unit", "electric-toothbrush",
     {{{"Strokes", "40,000 per minute"}, {"Battery life", "30 days"}, {"Modes", "5"}, {"Charge time", "4 hours"}}},
     "thorough plaque removal", "a dentist-level clean at home",
     "Over a month of twice-daily use the pressure sensor flagged heavy brushing reliably",
     89},
    {"standing desk", "office unit", "standing-desk",
     {{{"Height range", "62 to 127 cm"}, {"Load capacity", "120 kg"}, {"Motors", "2"}, {"Speed", "38 mm/s"}}},
     "smooth and stable height changes", "healthier posture through the workday",
     "At full height with two monitors it showed almost no wobble when typing",
     499},
    {"smart thermostat", "climate unit", "smart-thermostat",
     {{{"Sensors", "temperature and humidity"}, {"Display", "3.5 in"}, {"Connectivity", "Wi-Fi"}, {"Accuracy", "0.5 C"}}},
     "precise temperature control", "lower heating bills",
     "Across one winter month it learned the household schedule within four days",
     219},
    {"mechanical keyboard", "typing unit", "mechanical-keyboard",
     {{{"Switches", "tactile brown"}, {"Layout", "75 percent"}, {"Battery", "4000 mAh"}, {"Polling rate", "1000 Hz"}}},
     "crisp and consistent key feel", "comfortable typing for long sessions",
     "After a week of writing every key registered cleanly with no chatter",
     129},
    {"portable blender", "travel unit", "portable-blender",
     {{{"Capacity", "500 ml"}, {"Battery", "4000 mAh"}, {"Blades", "6"}, {"Blends per charge", "15"}}},
     "smooth smoothies in under a minute", "fresh drinks on the go",
     "With frozen fruit it produced a smooth blend in three pulses",
     59},
    {"e-reader", "reading unit", "e-reader",
     {{{"Screen", "7 in 300 ppi"}, {"Storage", "32 GB"}, {"Battery life", "10 weeks"}, {"Water rating", "IPX8"}}},
     "sharp text with even lighting", "comfortable reading at night",
     "Reading outdoors in direct sun the text stayed crisp with no glare",
     179},
    {"air fryer", "countertop unit", "air-fryer",
     {{{"Capacity", "5.5 L"}, {"Power", "1700 W"}, {"Temperature range", "80 to 200 C"}, {"Presets", "8"}}},
     "crispy results with little oil", "faster weeknight meals",
     "A full basket of fries came out evenly browned in eighteen minutes",
     119},
}};

const std::array<const char*, 12> kBrandStems{
    {"Zephyr", "CleanBot", "Nimbus", "Vantor", "Korrin", "Lumora", "Quillo", "Brisaro", "Tandell", "Orvyn",
     "Maristo", "Pellara"}};
const std::array<const char*, 8> kModelNames{{"Pro X3", "Pulse 2", "Aria S", "Core 5", "Nova Plus", "Edge 7",
                                              "Flex One", "Prime Lite"}};
const std::array<const char*, 6> kPublishers{{"gearnotes", "homebench", "testloft", "reviewhaven", "kitlab",
                                              "dailyspec"}};
const std::array<const char*, 4> kLabs{{"Harlow Test Labs", "Meridian Certification", "Brightline Labs",
                                        "Northgate Testing"}};

// Neutral padding, none of which carries a tested cue.
const std::array<const char*, 10> kFiller{{
    "Setup took a few minutes.",
    "The box includes a short manual.",
    "The packaging is mostly cardboard.",
    "Colour options vary by region.",
    "The finish is a matte grey.",
    "The unit ships with a quick start card and a small accessory pouch.",
    "Replacement parts are listed on the maker's support page.",
    "The controls are labelled with simple icons.",
    "Firmware updates install over the companion app.",
    "The cable is about one metre long.",
}};

struct Product {
  const Category* category;
  std::string brand;
  std::string model;
  std::string competitor;
  std::string lab;
};

enum class Date { Recent, Old, None };

struct ArticleOptions {
  Date date = Date::Recent;
  bool keyword_gap = false;
  bool price = true;
  bool specs = true;
  bool comparison = true;
  bool hedged = false;
  bool evidence = true;
  bool contradiction = false;
  bool promotional = false;
  bool structured = true;
  bool scattered = false;
  bool strong_value = true;
  bool deep = true;
  bool strong_social = true;
};

std::string format_price(int dollars) { return "$" + std::to_string(dollars); }

// Sections are lists of sentences; the last step joins them.
std::string write_article(const Product& p, const ArticleOptions& o, std::mt19937_64& rng) {
  const Category& c = *p.category;
  const std::string name = p.brand + " " + p.model;
  const std::string noun = o.keyword_gap ? c.generic : c.name;

  std::vector<std::pair<std::string, std::vector<std::string>>> sections;
  std::vector<std::string> overview;
  if (o.date == Date::Recent) overview.push_back("Published March 12, 2026.");
  if (o.date == Date::Old) overview.push_back("Published March 12, 2019.");
  overview.push_back("The " + name + " is " + with_article(noun) + " built for everyday use at home.");
  if (o.hedged) {
    overview.push_back("It might possibly deliver what could be " + std::string(c.claim) + ", perhaps.");
  } else {
    overview.push_back("It delivers " + std::string(c.claim) + ".");
  }
  if (o.contradiction) {
    overview.push_back("However, it does not deliver " + std::string(c.claim) + " in practice.");
  }
  if (o.evidence) {
    overview.push_back("Independent testing by " + p.lab + " confirmed these results and certified the unit.");
  }
  sections.emplace_back("Overview", std::move(overview));

  if (o.specs) {
    std::vector<std::string> spec_lines;
    for (const auto& s : c.specs) spec_lines.push_back(std::string("- ") + s.key + ": " + s.value);
    sections.emplace_back("Specifications", std::move(spec_lines));
  }

  std::vector<std::string> analysis;
  if (o.deep) {
    analysis.push_back(std::string(c.detail) + ".");
  } else {
    analysis.push_back("It works fine for most people and does what it says.");
    analysis.push_back("There is not much else to report.");
  }
  if (o.comparison) {
    analysis.push_back("Compared with the " + p.competitor + ", it offers longer support and a quieter design.");
  }
  sections.emplace_back("Analysis", std::move(analysis));

  std::vector<std::string> buying;
  if (o.price) {
    buying.push_back("It retails for " + format_price(c.price) + ".");
  } else {
    buying.push_back("Contact the retailer for pricing details.");
  }
  if (o.strong_value) {
    buying.push_back("Its main advantage is " + std::string(c.benefit) + ", which saves owners time every week.");
  } else {
    buying.push_back("It is a reasonable option among similar products.");
  }
  if (o.strong_social) {
    buying.push_back("Buyers rate it 4.7 out of 5 across 2,300 reviews.");
  } else {
    buying.push_back("Buyers rate it 3.1 out of 5 across 12 reviews.");
  }
  if (o.promotional) {
    buying.push_back("This is the most amazing " + noun + " ever made, an absolute must-buy that you will love!");
  } else {
    buying.push_back("Overall, it is a dependable choice for most households.");
  }
  sections.emplace_back("Buying advice", std::move(buying));

  if (o.scattered) {
    std::vector<std::string> all;
    for (auto& [h, lines] : sections) all.insert(all.end(), lines.begin(), lines.end());
    std::shuffle(all.begin(), all.end(), rng);
    std::string out;
    for (const auto& l : all) out += l + "\n";
    return out;
  }

  std::string out;
  if (o.structured) {
    for (const auto& [heading, lines] : sections) {
      out += "## " + heading + "\n";
      for (const auto& l : lines) out += l + "\n";
      out += "\n";
    }
  } else {
    for (const auto& [heading, lines] : sections) {
      for (const auto& l : lines) {
        std::string sentence = l;
        if (sentence.rfind("- ", 0) == 0) sentence = sentence.substr(2) + ".";
        if (!out.empty()) out += " ";
        out += sentence;
      }
    }
    out += "\n";
  }
  return out;
}

void pad_to_parity(std::string& shorter, std::size_t target) {
  // Greedy: append the filler that leaves the smallest gap, until within 20 code points.
  for (int guard = 0; guard < 64; ++guard) {
    const std::size_t len = utf8_length(shorter);
    if (len + 20 >= target) return;
    const std::size_t gap = target - len;
    const char* best = kFiller[0];
    std::size_t best_rem = gap;
    for (const char* f : kFiller) {
      const std::size_t flen = utf8_length(f) + 1;
      if (flen <= gap && gap - flen < best_rem) {
        best = f;
        best_rem = gap - flen;
      }
    }
    if (best_rem == gap) return;
    shorter += best;
    shorter += "\n";
  }
}

VariantDoc make_doc(Variant v, std::string title, std::string url, std::string body) {
  VariantDoc d;
  d.variant_id = v;
  d.title = std::move(title);
  d.url = std::move(url);
  d.declared_length = utf8_length(body);
  d.body = std::move(body);
  return d;
}

template <typename T, std::size_t N>
const T& pick(const std::array<T, N>& arr, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, N - 1);
  return arr[dist(rng)];
}

Scenario make_scenario(int factor_id, int index, std::mt19937_64& rng) {
  char id[32];
  std::snprintf(id, sizeof id, "f%02d-s%03d", factor_id, index);

  // Twenty blogs per factor, four scenarios per blog.
  std::uniform_int_distribution<int> blog_dist(0, 99);
  const int blog = blog_dist(rng);
  const Category& cat = kCategories[static_cast<std::size_t>(blog / 2) % kCategories.size()];

  Product p;
  p.category = &cat;
  p.brand = pick(kBrandStems, rng);
  p.model = pick(kModelNames, rng);
  do {
    p.competitor = std::string(pick(kBrandStems, rng)) + " " + pick(kModelNames, rng);
  } while (p.competitor == p.brand + " " + p.model);
  p.lab = pick(kLabs, rng);

  ArticleOptions a;
  ArticleOptions b;
  switch (factor_id) {
    case 1: break;  // B is rendered for another category below
    case 2: b.keyword_gap = true; break;
    case 3: b.price = false; break;
    case 4: b.specs = false; break;
    case 5: b.comparison = false; break;
    case 6: b.hedged = true; break;
    case 7: b.evidence = false; break;
    case 8: b.contradiction = true; break;
    case 9: b.promotional = true; break;
    case 10: b.structured = false; break;
    case 11: b.scattered = true; break;
    case 12: b.strong_value = false; break;
    case 13: b.deep = false; break;
    case 14: b.strong_social = false; break;
    case 15: break;  // identical bodies, distinct URLs
    case 16: b.date = Date::Old; break;
    case 17: a.date = Date::None; b.date = Date::Old; break;
    case 18: b.date = Date::None; break;
    default: throw std::invalid_argument("unknown factor id " + std::to_string(factor_id));
  }

  std::mt19937_64 shuffle_rng(rng());
  std::string body_a = write_article(p, a, shuffle_rng);
  std::string body_b;
  std::string title_b = p.brand + " " + p.model + " Review";
  if (factor_id == 1) {
    Product other = p;
    const std::size_t offset = 1 + static_cast<std::size_t>(blog % static_cast<int>(kCategories.size() - 1));
    other.category = &kCategories[(static_cast<std::size_t>(&cat - kCategories.data()) + offset) % kCategories.size()];
    body_b = write_article(other, b, shuffle_rng);
  } else if (factor_id == 15) {
    body_b = body_a;
  } else {
    body_b = write_article(p, b, shuffle_rng);
  }
  const std::size_t la = utf8_length(body_a);
  const std::size_t lb = utf8_length(body_b);
  if (la < lb) pad_to_parity(body_a, lb);
  if (lb < la) pad_to_parity(body_b, la);

  const char* pub_a = pick(kPublishers, rng);
  const char* pub_b = pub_a;
  while (pub_b == pub_a) pub_b = pick(kPublishers, rng);
  const std::string path = std::string("/reviews/") + cat.slug + "-" + id;

  Scenario s;
  s.scenario_id = id;
  s.factor_id = factor_id;
  char blog_id[16];
  std::snprintf(blog_id, sizeof blog_id, "blog-%03d", blog);
  s.blog_id = blog_id;
  const std::string title = p.brand + " " + p.model + " Review";
  s.variant_a = make_doc(Variant::A, title, std::string("https://www.") + pub_a + ".example" + path, body_a);
  s.variant_b = make_doc(Variant::B, title_b, std::string("https://www.") + pub_b + ".example" + path, body_b);
  const std::string n = cat.name;
  s.queries = {"What is the best " + n + " to buy right now?",
               "Which " + n + " would you recommend?",
               "I'm shopping for " + with_article(n) + ". Which one should I get?"};
  s.tool_query = "best " + n + " review";
  return s;
}

}  // namespace

Corpus synth_corpus(const SynthConfig& config, std::uint64_t seed) {
  const std::vector<int>& factors = config.factors;
  if (factors.empty()) throw std::invalid_argument("synth config requests 0 factors");
  if (config.per_factor < 1) throw std::invalid_argument("per_factor must be >= 1");
  for (int f : factors) {
    if (!find_factor(f)) throw std::invalid_argument("unknown factor id " + std::to_string(f));
  }
  std::vector<Scenario> scenarios;
  scenarios.reserve(factors.size() * static_cast<std::size_t>(config.per_factor));
  for (int f : factors) {
    std::mt19937_64 rng(sha256_u64("synth|" + std::to_string(seed) + "|" + std::to_string(f)));
    for (int i = 0; i < config.per_factor; ++i) scenarios.push_back(make_scenario(f, i, rng));
  }
  return Corpus(std::move(scenarios));
}

}  // namespace citepref
