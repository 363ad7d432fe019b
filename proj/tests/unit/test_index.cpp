#include "eoli/index.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace eoli;

namespace {

SubIndexSeries series(SubIndex pillar, ScoreMap scores) {
    SubIndexSeries s;
    s.pillar = pillar;
    s.scores = std::move(scores);
    return s;
}

std::array<SubIndexSeries, 4> uniform_subs(const ScoreMap &e, const ScoreMap &i, const ScoreMap &q, const ScoreMap &s) {
    return {series(SubIndex::Economic, e), series(SubIndex::Institutional, i), series(SubIndex::QualityOfLife, q),
            series(SubIndex::Sustainability, s)};
}

CompositeIndex index_of(const std::map<std::string, double> &scores, int year = 2021) {
    CompositeIndex idx;
    for (const auto &[c, v] : scores) {
        idx.eoli[{c, year}] = v;
        idx.countries.push_back(c);
    }
    return idx;
}

std::string code(int i) {
    return std::string{static_cast<char>('A' + i / 26), static_cast<char>('A' + i % 26), 'X'};
}

} // namespace

TEST(OrientationSign, PolarityWeightedSum) {
    const std::vector<double> adverse_loading{0.9};
    const std::vector<Polarity> adverse{Polarity::Adverse};
    EXPECT_EQ(orientation_sign(adverse_loading, adverse), -1);
    const std::vector<Polarity> good{Polarity::Beneficial};
    EXPECT_EQ(orientation_sign(adverse_loading, good), 1);
    const std::vector<double> mixed{0.9, -0.8, 0.2};
    const std::vector<Polarity> pol{Polarity::Beneficial, Polarity::Adverse, Polarity::Adverse};
    EXPECT_EQ(orientation_sign(mixed, pol), 1); // 0.9 + 0.8 - 0.2
    const std::vector<double> zero{0.0};
    EXPECT_EQ(orientation_sign(zero, good), 1);
}

TEST(BuildSubIndex, MinMaxPooled) {
    const ScoreMap raw{{{"A", 2000}, -2.0}, {{"B", 2000}, 0.0}, {{"C", 2001}, 2.0}};
    const std::vector<double> loading{0.7};
    const std::vector<Polarity> good{Polarity::Beneficial};
    const auto s = build_sub_index(SubIndex::Economic, raw, loading, good);
    EXPECT_EQ(s.orientation_sign, 1);
    EXPECT_EQ(s.scores.at({"A", 2000}), 0.0);
    EXPECT_EQ(s.scores.at({"B", 2000}), 0.5);
    EXPECT_EQ(s.scores.at({"C", 2001}), 1.0);
    EXPECT_EQ(s.raw_min, -2.0);
    EXPECT_EQ(s.raw_max, 2.0);
    const std::vector<Polarity> bad{Polarity::Adverse};
    const auto flipped = build_sub_index(SubIndex::Economic, raw, loading, bad);
    EXPECT_EQ(flipped.orientation_sign, -1);
    EXPECT_EQ(flipped.scores.at({"A", 2000}), 1.0);
    EXPECT_EQ(flipped.scores.at({"C", 2001}), 0.0);
}

TEST(BuildSubIndex, Errors) {
    const std::vector<double> loading{0.7};
    const std::vector<Polarity> good{Polarity::Beneficial};
    const ScoreMap flat{{{"A", 2000}, 1.0}, {{"B", 2000}, 1.0}};
    EXPECT_ERROR_KIND(build_sub_index(SubIndex::Economic, flat, loading, good), ErrorKind::DegenerateRange);
    EXPECT_ANY_THROW(build_sub_index(SubIndex::Economic, ScoreMap{}, loading, good));
}

TEST(BuildSubIndex, RandomSpansUnitInterval) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> z;
    const std::vector<double> loading{0.5, -0.3};
    const std::vector<Polarity> pol{Polarity::Beneficial, Polarity::Adverse};
    for (int trial = 0; trial < 50; ++trial) {
        ScoreMap raw;
        for (int c = 0; c < 2 + trial % 7; ++c) {
            for (int y = 2000; y < 2005; ++y) {
                raw[{code(c), y}] = z(gen) * 10.0;
            }
        }
        for (auto norm : {Normalization::Pooled, Normalization::PerYear}) {
            const auto s = build_sub_index(SubIndex::Economic, raw, loading, pol, norm);
            double lo = 1.0;
            double hi = 0.0;
            for (const auto &[k, v] : s.scores) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            EXPECT_EQ(lo, 0.0);
            EXPECT_EQ(hi, 1.0);
            if (norm == Normalization::PerYear) {
                for (int y = 2000; y < 2005; ++y) {
                    double ylo = 1.0;
                    double yhi = 0.0;
                    for (const auto &[k, v] : s.scores) {
                        if (k.year == y) {
                            ylo = std::min(ylo, v);
                            yhi = std::max(yhi, v);
                        }
                    }
                    EXPECT_EQ(ylo, 0.0);
                    EXPECT_EQ(yhi, 1.0);
                }
            }
        }
    }
}

TEST(CompositeWeights, Validation) {
    EXPECT_NO_THROW(CompositeWeights{}.validate());
    EXPECT_ERROR_KIND((CompositeWeights{0.3, 0.3, 0.3, 0.3}.validate()), ErrorKind::WeightSum);
    EXPECT_ERROR_KIND((CompositeWeights{0.2, 0.2, 0.35, 0.15}.validate()), ErrorKind::WeightSum);
    EXPECT_ERROR_KIND((CompositeWeights{1.2, -0.2, 0.0, 0.0}.validate()), ErrorKind::WeightSum);
    EXPECT_NO_THROW((CompositeWeights{1.0, 0.0, 0.0, 0.0}.validate()));
}

TEST(ComposeEoli, HandExampleAndEqualValues) {
    const RowKey k{"AUS", 2021};
    const auto subs = uniform_subs({{k, 0.8}}, {{k, 0.6}}, {{k, 0.7}}, {{k, 0.4}});
    const auto idx = compose_eoli(subs);
    EXPECT_NEAR(idx.eoli.at(k), 0.655, 1e-12);
    const auto same = uniform_subs({{k, 0.37}}, {{k, 0.37}}, {{k, 0.37}}, {{k, 0.37}});
    EXPECT_NEAR(compose_eoli(same, {0.1, 0.2, 0.3, 0.4}).eoli.at(k), 0.37, 1e-12);
    EXPECT_ERROR_KIND(compose_eoli(subs, {0.3, 0.3, 0.3, 0.3}), ErrorKind::WeightSum);
}

TEST(ComposeEoli, IntersectionAndCoverage) {
    const RowKey a{"AUS", 2021};
    const RowKey b{"BRA", 2021};
    const auto subs = uniform_subs({{a, 0.1}, {b, 0.2}}, {{a, 0.3}, {b, 0.4}}, {{a, 0.5}}, {{a, 0.6}, {b, 0.9}});
    const auto idx = compose_eoli(subs);
    EXPECT_EQ(idx.eoli.size(), 1u);
    EXPECT_EQ(idx.incomplete_keys, std::vector<RowKey>{b});
    const auto disjoint = uniform_subs({{a, 0.1}}, {{a, 0.3}}, {{b, 0.5}}, {{a, 0.6}});
    EXPECT_ERROR_KIND(compose_eoli(disjoint), ErrorKind::EmptyIntersection);
}

TEST(ComposeEoli, ConvexOnRandomInputs) {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<double, 4> w{u(gen), u(gen), u(gen), u(gen)};
        const double total = w[0] + w[1] + w[2] + w[3];
        for (auto &x : w) {
            x /= total;
        }
        w[3] = 1.0 - w[0] - w[1] - w[2];
        const CompositeWeights weights{w[0], w[1], w[2], w[3]};
        ScoreMap maps[4];
        for (int c = 0; c < 5; ++c) {
            for (auto &m : maps) {
                m[{code(c), 2000}] = u(gen);
            }
        }
        const auto idx = compose_eoli(uniform_subs(maps[0], maps[1], maps[2], maps[3]), weights);
        for (const auto &[k, v] : idx.eoli) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            double dot = 0.0;
            for (int p = 0; p < 4; ++p) {
                dot += w[static_cast<std::size_t>(p)] * maps[p].at(k);
            }
            EXPECT_NEAR(v, dot, 1e-12);
        }
    }
}

TEST(RankYear, OrderingTiesAndCoverage) {
    auto idx = index_of({{"A", 0.9}, {"B", 0.5}, {"C", 0.2}});
    auto t = rank_year(idx, 2021);
    ASSERT_EQ(t.entries.size(), 3u);
    EXPECT_EQ(t.entries[0].country, "A");
    EXPECT_EQ(t.entries[2].rank, 3);
    idx = index_of({{"A", 0.9}, {"C", 0.5}, {"B", 0.5}});
    t = rank_year(idx, 2021);
    EXPECT_EQ(t.entries[1].country, "B");
    EXPECT_EQ(t.entries[1].rank, 2);
    EXPECT_EQ(t.entries[2].country, "C");
    EXPECT_EQ(t.entries[2].rank, 3);
    EXPECT_EQ(t.ties, 1);
    idx.eoli[{"A", 2020}] = 0.4;
    idx.countries.push_back("D");
    const auto t2020 = rank_year(idx, 2020);
    EXPECT_EQ(t2020.entries.size(), 1u);
    EXPECT_EQ(t2020.excluded, (std::vector<std::string>{"B", "C", "D"}));
    EXPECT_ERROR_KIND(rank_year(idx, 1999), ErrorKind::UnknownYear);
    EXPECT_EQ(index_years(idx), (std::vector<int>{2020, 2021}));
}

TEST(RankYear, MonotonicityTrials) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, 11);
    for (int trial = 0; trial < 1000; ++trial) {
        ScoreMap maps[4];
        for (int c = 0; c < 12; ++c) {
            for (auto &m : maps) {
                // coarse grid so ties occur
                m[{code(c), 2000}] = std::round(u(gen) * 20.0) / 20.0;
            }
        }
        const int who = pick(gen);
        const auto before = rank_year(compose_eoli(uniform_subs(maps[0], maps[1], maps[2], maps[3])), 2000);
        for (auto &m : maps) {
            double &v = m[{code(who), 2000}];
            v = std::min(1.0, v + u(gen) * 0.3);
        }
        const auto after = rank_year(compose_eoli(uniform_subs(maps[0], maps[1], maps[2], maps[3])), 2000);
        auto rank_of = [&](const RankTable &t) {
            for (const auto &e : t.entries) {
                if (e.country == code(who)) {
                    return e.rank;
                }
            }
            return -1;
        };
        ASSERT_LE(rank_of(after), rank_of(before)) << "trial " << trial;
    }
}

TEST(RankYear, AffineInvariance) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::map<std::string, double> raw;
        std::map<std::string, double> moved;
        const double a = 0.1 + 5.0 * u(gen);
        const double b = u(gen) * 4.0 - 2.0;
        for (int c = 0; c < 15; ++c) {
            const double v = std::round(u(gen) * 1000.0) / 1000.0;
            raw[code(c)] = v;
            moved[code(c)] = a * v + b;
        }
        const auto t1 = rank_year(index_of(raw), 2021);
        const auto t2 = rank_year(index_of(moved), 2021);
        for (std::size_t i = 0; i < t1.entries.size(); ++i) {
            // equal raw values may separate after rounding in a*v+b; compare strict orderings only
            if (i + 1 < t1.entries.size() && t1.entries[i].score > t1.entries[i + 1].score) {
                const auto pos = [&](const RankTable &t, const std::string &c) {
                    for (const auto &e : t.entries) {
                        if (e.country == c) {
                            return e.rank;
                        }
                    }
                    return -1;
                };
                EXPECT_LT(pos(t2, t1.entries[i].country), pos(t2, t1.entries[i + 1].country));
            }
        }
    }
}

TEST(AverageRanks, Examples) {
    CompositeIndex idx;
    idx.countries = {"A", "B", "C"};
    for (int y = 2010; y < 2015; ++y) {
        idx.eoli[{"A", y}] = 0.9;
        idx.eoli[{"B", y}] = y % 2 ? 0.2 : 0.5;
        idx.eoli[{"C", y}] = y % 2 ? 0.5 : 0.2;
    }
    const auto single = average_ranks(idx, {2011, 2011});
    const auto table = rank_year(idx, 2011);
    for (const auto &row : single) {
        for (const auto &e : table.entries) {
            if (e.country == row.country) {
                EXPECT_EQ(row.eoli, e.rank);
            }
        }
    }
    const auto decade = average_ranks(idx, {2010, 2014});
    for (const auto &row : decade) {
        if (row.country == "A") {
            EXPECT_EQ(row.eoli, 1.0);
            EXPECT_EQ(row.years_present, 5);
        } else if (row.country == "B") {
            EXPECT_DOUBLE_EQ(row.eoli, (2 + 3 + 2 + 3 + 2) / 5.0);
        }
    }
    EXPECT_ERROR_KIND(average_ranks(idx, {1990, 1991}), ErrorKind::UnknownYear);
    const auto csv = format_average_ranks_csv(decade);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "country,years,eoli,economic,institutional,quality_of_life,sustainability");
    EXPECT_NE(csv.find("A,5,1.0,"), std::string::npos) << csv;
}

TEST(SubIndexCorrelation, SelfAndNegationAndBruteForce) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScoreMap x;
    ScoreMap neg;
    ScoreMap c;
    ScoreMap d;
    for (int i = 0; i < 30; ++i) {
        const RowKey k{code(i % 6), 2000 + i / 6};
        x[k] = u(gen);
        neg[k] = 1.0 - x[k];
        c[k] = u(gen);
        d[k] = 0.5 * x[k] + 0.5 * u(gen);
    }
    const auto subs = uniform_subs(x, neg, c, d);
    const auto table = sub_index_correlation(subs);
    ASSERT_EQ(table.values.rows(), 4);
    EXPECT_NEAR(table.values(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(table.values(0, 1), -1.0, 1e-12);
    EXPECT_LT((table.values - table.values.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    // brute force Pearson
    auto pearson = [](const ScoreMap &a, const ScoreMap &b) {
        double ma = 0, mb = 0;
        for (const auto &[k, v] : a) {
            ma += v;
            mb += b.at(k);
        }
        ma /= static_cast<double>(a.size());
        mb /= static_cast<double>(a.size());
        double sab = 0, saa = 0, sbb = 0;
        for (const auto &[k, v] : a) {
            sab += (v - ma) * (b.at(k) - mb);
            saa += (v - ma) * (v - ma);
            sbb += (b.at(k) - mb) * (b.at(k) - mb);
        }
        return sab / std::sqrt(saa * sbb);
    };
    EXPECT_NEAR(table.values(0, 3), pearson(x, d), 1e-12);
    EXPECT_NEAR(table.values(2, 3), pearson(c, d), 1e-12);
    const auto with_year = sub_index_correlation(subs, true);
    EXPECT_EQ(with_year.values.rows(), 5);
    ScoreMap years;
    for (const auto &[k, v] : x) {
        years[k] = k.year;
    }
    EXPECT_NEAR(with_year.values(4, 0), pearson(years, x), 1e-12);
    const auto tiny = uniform_subs({{{"A", 1}, 0.1}}, {{{"A", 1}, 0.1}}, {{{"A", 1}, 0.1}}, {{{"A", 1}, 0.1}});
    EXPECT_ERROR_KIND(sub_index_correlation(tiny), ErrorKind::InsufficientOverlap);
}

TEST(Percentile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(percentile({5}, 0.9), 5.0);
    EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 1.0), 5.0);
}

TEST(CategorizeLevels, Examples) {
    std::map<std::string, double> eight;
    for (int i = 0; i < 8; ++i) {
        eight[code(i)] = 0.1 * i;
    }
    const auto levels = categorize_levels(index_of(eight), 2021);
    std::map<Level, int> counts;
    for (const auto &[c, l] : levels) {
        ++counts[l];
    }
    for (auto l : {Level::Low, Level::MediumLow, Level::MediumHigh, Level::High}) {
        EXPECT_EQ(counts[l], 2);
    }
    EXPECT_EQ(levels.at(code(0)), Level::Low);
    EXPECT_EQ(levels.at(code(7)), Level::High);
    const auto equal = categorize_levels(index_of({{"A", 0.5}, {"B", 0.5}, {"C", 0.5}, {"D", 0.5}}), 2021);
    for (const auto &[c, l] : equal) {
        EXPECT_EQ(l, Level::Low);
    }
    EXPECT_ERROR_KIND(categorize_levels(index_of({{"A", 0.5}, {"B", 0.4}, {"C", 0.1}}), 2021),
                      ErrorKind::TooFewCountries);
}

TEST(CategorizeLevels, NeverInvertsStrictOrdering) {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::map<std::string, double> scores;
        const int n = 4 + trial % 30;
        for (int i = 0; i < n; ++i) {
            scores[code(i)] = std::round(u(gen) * 10.0) / 10.0;
        }
        const auto levels = categorize_levels(index_of(scores), 2021);
        for (const auto &[a, va] : scores) {
            for (const auto &[b, vb] : scores) {
                if (va > vb) {
                    EXPECT_GE(static_cast<int>(levels.at(a)), static_cast<int>(levels.at(b)));
                }
            }
        }
    }
}

TEST(CompareExternalRanks, IdenticalReversedAndGap) {
    const auto ours = rank_year(index_of({{"A", 0.9}, {"B", 0.7}, {"C", 0.5}, {"D", 0.1}}), 2021);
    const auto same = compare_external_ranks(ours, {{"A", 1}, {"B", 2}, {"C", 3}, {"D", 4}});
    EXPECT_NEAR(same.spearman, 1.0, 1e-12);
    for (const auto &row : same.rows) {
        EXPECT_EQ(row.gap, 0);
    }
    const auto reversed = compare_external_ranks(ours, {{"A", 40}, {"B", 30}, {"C", 20}, {"D", 10}});
    EXPECT_NEAR(reversed.spearman, -1.0, 1e-12);
    const auto partial = compare_external_ranks(ours, {{"A", 139}, {"C", 5}, {"ZZ", 1}});
    ASSERT_EQ(partial.rows.size(), 2u);
    EXPECT_EQ(partial.rows[0].country, "A");
    EXPECT_EQ(partial.rows[0].gap, 1 - 139);
    EXPECT_ERROR_KIND(compare_external_ranks(ours, {{"A", 1}}), ErrorKind::InsufficientOverlap);
    const auto csv = format_comparison_csv(same);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "country,our_rank,external_rank,gap");
    EXPECT_NE(csv.find("# spearman=1.000000"), std::string::npos) << csv;
}

TEST(CompareExternalRanks, SpearmanMatchesPearsonOfRanks) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::map<std::string, double> scores;
    std::map<std::string, int> external;
    for (int i = 0; i < 20; ++i) {
        scores[code(i)] = u(gen);
        external[code(i)] = 100 + static_cast<int>(u(gen) * 1000);
    }
    const auto cmp = compare_external_ranks(rank_year(index_of(scores), 2021), external);
    // oracle: classic 1 - 6 sum d^2 / (n (n^2 - 1)) with re-ranked external positions (no ties here)
    std::vector<std::pair<int, std::string>> ext;
    for (const auto &[c, r] : external) {
        ext.emplace_back(r, c);
    }
    std::sort(ext.begin(), ext.end());
    std::map<std::string, int> ext_pos;
    for (std::size_t i = 0; i < ext.size(); ++i) {
        ext_pos[ext[i].second] = static_cast<int>(i) + 1;
    }
    double d2 = 0.0;
    for (const auto &row : cmp.rows) {
        const double d = row.our_rank - ext_pos[row.country];
        d2 += d * d;
    }
    const double n = 20;
    EXPECT_NEAR(cmp.spearman, 1.0 - 6.0 * d2 / (n * (n * n - 1.0)), 1e-12);
}

TEST(ExternalRanks, LoadCsv) {
    const auto dir = test::temp_dir("external");
    test::write_file(dir / "ranks.csv", "country,rank\nAUS,12\nIND,139\n");
    const auto ranks = load_external_ranks(dir / "ranks.csv");
    EXPECT_EQ(ranks.at("IND"), 139);
    test::write_file(dir / "bad.csv", "country,rank\nAUS,twelve\n");
    EXPECT_ANY_THROW(load_external_ranks(dir / "bad.csv"));
}

TEST(Formatting, HeadersAndFixedDecimals) {
    const RowKey k{"AUS", 2021};
    const auto subs = uniform_subs({{k, 0.8}}, {{k, 0.6}}, {{k, 0.7}}, {{k, 0.4}});
    const auto idx = compose_eoli(subs);
    EXPECT_EQ(format_subindex_csv(subs, idx),
              "country,year,economic,institutional,quality_of_life,sustainability,eoli\n"
              "AUS,2021,0.800000,0.600000,0.700000,0.400000,0.655000\n");
    EXPECT_EQ(format_rankings_csv({rank_year(idx, 2021)}), "year,rank,country,eoli\n2021,1,AUS,0.655000\n");
    const std::vector<std::pair<int, std::map<std::string, Level>>> levels = {{2021, {{"AUS", Level::MediumHigh}}}};
    EXPECT_EQ(format_categories_csv(levels), "year,country,level\n2021,AUS,MediumHigh\n");
}
