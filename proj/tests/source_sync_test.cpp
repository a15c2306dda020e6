#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "pure/source_sync.hpp"
#include "support/fetchers.hpp"
#include "support/random_instances.hpp"
#include "support/temp_dir.hpp"

using namespace pure;
using pure::testing::FakeFetcher;
using pure::testing::label;
using pure::testing::source;
using pure::testing::TempDir;
using pure::testing::url;

namespace {

constexpr const char* kCoopUrl = "https://coop.example/labels.tsv";

Registry two_remote_sources() {
    std::vector<ConfigWarning> warnings;
    auto registry = parse_sources_config(
        "# tier\tid\turl\n"
        "1\tcoop\thttps://coop.example/labels.tsv\n"
        "2\tcrowd\thttps://crowd.example/all.labels\n",
        warnings);
    EXPECT_TRUE(warnings.empty());
    return registry;
}

}  // namespace

TEST(SourcesConfig, TwoRemoteSourcesPlusInjectedUser) {
    const auto registry = two_remote_sources();
    ASSERT_EQ(registry.size(), 3u);
    EXPECT_EQ(registry.sources()[0].id, user_source_id());
    EXPECT_EQ(registry.sources()[0].kind, SourceKind::User);
    EXPECT_EQ(registry.sources()[0].tier.value(), 0);
    EXPECT_EQ(registry.sources()[1].id.str(), "coop");
    EXPECT_EQ(registry.sources()[1].tier.value(), 1);
    EXPECT_EQ(registry.sources()[2].url, "https://crowd.example/all.labels");
}

TEST(SourcesConfig, EmptyConfigIsUserOnly) {
    std::vector<ConfigWarning> warnings;
    EXPECT_EQ(parse_sources_config("", warnings).size(), 1u);
    EXPECT_EQ(parse_sources_config("# nothing here\n\n", warnings).size(), 1u);
    EXPECT_TRUE(warnings.empty());
}

TEST(SourcesConfig, ExplicitUserLineIsNotDuplicated) {
    std::vector<ConfigWarning> warnings;
    const auto registry = parse_sources_config("0\tuser\n1\ta\thttp://a.example/\n0\tuser\t-\n", warnings);
    EXPECT_EQ(registry.size(), 2u);
    EXPECT_THROW(parse_sources_config("1\tuser\n", warnings), ConfigError);
}

TEST(SourcesConfig, RemoteAtTierZeroIsAcceptedWithWarning) {
    std::vector<ConfigWarning> warnings;
    const auto registry = parse_sources_config("1\ta\thttp://a.example/\n0\ttrusted\thttps://t.example/\n", warnings);
    EXPECT_EQ(registry.size(), 3u);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_EQ(warnings[0].line, 2u);
}

TEST(SourcesConfig, ErrorsCarryLineNumbers) {
    std::vector<ConfigWarning> warnings;
    const std::vector<std::pair<std::string, std::size_t>> cases{
        {"1\ta\thttp://a/\n1\ta\thttp://b/\n", 2},   // duplicate id
        {"# c\n\nx\ta\thttp://a/\n", 3},              // bad tier
        {"-1\ta\thttp://a/\n", 1},                    // negative tier
        {"1\ta\n", 1},                                // missing url
        {"1\ta/b\thttp://a/\n", 1},                   // id not a file name
        {"1\t..\thttp://a/\n", 1},                    // id not a file name
        {"1\ta\tftp://a/\n", 1},                      // unsupported scheme
        {"1\ta\thttp://a/\textra\n", 1},              // too many fields
    };
    for (const auto& [text, line] : cases) {
        try {
            parse_sources_config(text, warnings);
            ADD_FAILURE() << "accepted: " << text;
        } catch (const ConfigError& e) {
            EXPECT_EQ(e.line(), line) << text;
            EXPECT_NE(std::string(e.what()).find("line " + std::to_string(line)), std::string::npos);
        }
    }
}

TEST(SourcesConfig, MissingFileFailsStartup) {
    std::vector<ConfigWarning> warnings;
    EXPECT_THROW(load_sources_config("/nonexistent/sources.conf", warnings), ConfigError);
}

TEST(Consolidate, EmptyStore) {
    const auto set = consolidate(Registry{}, StoreSnapshot{});
    EXPECT_TRUE(set.empty());
    EXPECT_EQ(set.tiers().size(), 1u);
}

TEST(Consolidate, SameItemFromTwoSourcesKeepsBothAndDuplicatesResolveLastWins) {
    const auto registry = two_remote_sources();
    StoreSnapshot store;
    const auto page = url("https://e.com/");
    store[source("coop")].records = {{label("k"), LabelValue::Applies, page},
                                     {label("k"), LabelValue::DoesNotApply, page}};
    store[source("crowd")].records = {{label("k"), LabelValue::Applies, page}};
    const auto set = consolidate(registry, store);
    EXPECT_EQ(set.size(), 2u);
    EXPECT_EQ(set.about({page, label("k")}).at(source("coop")), LabelValue::DoesNotApply);
    EXPECT_EQ(set.about({page, label("k")}).at(source("crowd")), LabelValue::Applies);
    EXPECT_EQ(set.tier_of(source("crowd")).value(), 2);
}

TEST(Consolidate, IsDeterministic) {
    const auto registry = two_remote_sources();
    StoreSnapshot store;
    store[source("coop")].records = {{label("a"), LabelValue::Applies, url("https://x.com/")}};
    const auto a = consolidate(registry, store);
    const auto b = consolidate(registry, store);
    EXPECT_EQ(a.items(), b.items());
    EXPECT_EQ(a.tiers(), b.tiers());
}

TEST(Refresh, ValidFileReplacesRecordsWholesale) {
    TempDir dir;
    auto fetcher = std::make_shared<FakeFetcher>();
    SourceSync sync(two_remote_sources(), dir.path(), fetcher);
    const auto& coop = *sync.registry().find(source("coop"));

    fetcher->set_body(kCoopUrl, "a\t1\thttps://one.example/\nb\t-1\thttps://two.example/\nc\t1\thttps://three.example/\n");
    auto outcome = sync.refresh(coop);
    EXPECT_TRUE(outcome.updated);
    EXPECT_EQ(outcome.record_count, 3u);
    EXPECT_EQ(sync.snapshot().store->at(coop.id).records.size(), 3u);

    fetcher->set_body(kCoopUrl, "z\t1\thttps://other.example/\n");
    outcome = sync.refresh(coop);
    const auto& state = sync.snapshot().store->at(coop.id);
    ASSERT_EQ(state.records.size(), 1u);
    EXPECT_EQ(state.records[0].label.str(), "z");
    EXPECT_TRUE(state.fetched_at.has_value());
    EXPECT_FALSE(state.last_error.has_value());

    // Persisted in the label format.
    std::ifstream in(sync.source_file(coop.id));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(text, "z\t1\thttps://other.example/\n");
}

TEST(Refresh, MalformedLineIsSkippedWithWarning) {
    TempDir dir;
    auto fetcher = std::make_shared<FakeFetcher>();
    SourceSync sync(two_remote_sources(), dir.path(), fetcher);
    fetcher->set_body(kCoopUrl, "a\t1\thttps://one.example/\nbroken line\nc\t-1\thttps://three.example/\n");
    const auto outcome = sync.refresh(*sync.registry().find(source("coop")));
    EXPECT_TRUE(outcome.updated);
    EXPECT_EQ(outcome.record_count, 2u);
    ASSERT_EQ(outcome.warnings.size(), 1u);
    EXPECT_EQ(outcome.warnings[0].line, 2u);
    EXPECT_EQ(sync.snapshot().store->at(source("coop")).warning_count, 1u);
}

TEST(Refresh, FailureKeepsCachedRecordsAndSetsLastError) {
    TempDir dir;
    auto fetcher = std::make_shared<FakeFetcher>();
    SourceSync sync(two_remote_sources(), dir.path(), fetcher);
    const auto& coop = *sync.registry().find(source("coop"));
    fetcher->set_body(kCoopUrl, "a\t1\thttps://one.example/\n");
    ASSERT_TRUE(sync.refresh(coop).updated);
    const auto before = sync.snapshot().store->at(coop.id);

    for (auto kind : {FetchError::Kind::Network, FetchError::Kind::Status, FetchError::Kind::Oversize}) {
        fetcher->set_error(kCoopUrl, kind, "timed out");
        const auto outcome = sync.refresh(coop);
        EXPECT_FALSE(outcome.updated);
        EXPECT_EQ(outcome.error, "timed out");
        const auto& after = sync.snapshot().store->at(coop.id);
        EXPECT_EQ(after.records, before.records);
        EXPECT_EQ(after.fetched_at, before.fetched_at);
        EXPECT_EQ(after.last_error, "timed out");
    }
}

TEST(Refresh, OversizeBodyIsRejected) {
    TempDir dir;
    auto fetcher = std::make_shared<FakeFetcher>();
    SourceSync::Options options;
    options.fetch_limits.max_body_bytes = 16;
    SourceSync sync(two_remote_sources(), dir.path(), fetcher, options);
    fetcher->set_body(kCoopUrl, "a\t1\thttps://one.example/\n");
    const auto outcome = sync.refresh(*sync.registry().find(source("coop")));
    EXPECT_FALSE(outcome.updated);
    EXPECT_TRUE(sync.snapshot().store->at(source("coop")).records.empty());
}

TEST(Refresh, CachedRecordsSurviveRestart) {
    TempDir dir;
    auto fetcher = std::make_shared<FakeFetcher>();
    {
        SourceSync sync(two_remote_sources(), dir.path(), fetcher);
        fetcher->set_body(kCoopUrl, "a\t1\thttps://one.example/\n");
        sync.refresh(*sync.registry().find(source("coop")));
    }
    SourceSync reopened(two_remote_sources(), dir.path(), std::make_shared<FakeFetcher>());
    const auto& state = reopened.snapshot().store->at(source("coop"));
    EXPECT_EQ(state.records.size(), 1u);
    EXPECT_TRUE(state.fetched_at.has_value());
}

TEST(UserAssertion, InsertThenOverwrite) {
    TempDir dir;
    SourceSync sync(Registry{}, dir.path(), std::make_shared<FakeFetcher>());
    const auto page = url("https://e.com/u");
    auto set = sync.record_user_assertion(page, label("hascookiebanner"), LabelValue::Applies);
    EXPECT_EQ(set.about({page, label("hascookiebanner")}).at(user_source_id()), LabelValue::Applies);

    set = sync.record_user_assertion(page, label("hascookiebanner"), LabelValue::DoesNotApply);
    EXPECT_EQ(set.size(), 1u);
    const auto& records = sync.snapshot().store->at(user_source_id()).records;
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0].value, LabelValue::DoesNotApply);
}

TEST(UserAssertion, SurvivesRestart) {
    TempDir dir;
    const auto page = url("https://e.com/u");
    {
        SourceSync sync(Registry{}, dir.path(), std::make_shared<FakeFetcher>());
        const auto g = sync.snapshot().generation;
        sync.record_user_assertion(page, label("haspopup"), LabelValue::Applies);
        sync.record_user_assertion(url("https://e.com/v"), label("haspopup"), LabelValue::DoesNotApply);
        EXPECT_EQ(sync.snapshot().generation, g + 2);
    }
    SourceSync reopened(Registry{}, dir.path(), std::make_shared<FakeFetcher>());
    const auto set = reopened.consolidate();
    EXPECT_EQ(set.size(), 2u);
    EXPECT_EQ(set.about({page, label("haspopup")}).at(user_source_id()), LabelValue::Applies);
}

TEST(UserAssertion, PersistenceFailureLeavesStateIntact) {
    TempDir dir;
    SourceSync sync(Registry{}, dir.path(), std::make_shared<FakeFetcher>());
    sync.record_user_assertion(url("https://e.com/a"), label("k"), LabelValue::Applies);
    const auto before = sync.snapshot();

    // A directory where the temporary file would go makes the write fail.
    std::filesystem::create_directory(sync.user_file().string() + ".tmp");
    EXPECT_THROW(sync.record_user_assertion(url("https://e.com/b"), label("k"), LabelValue::Applies),
                 PersistenceError);
    const auto after = sync.snapshot();
    EXPECT_EQ(after.generation, before.generation);
    EXPECT_EQ(after.store->at(user_source_id()).records, before.store->at(user_source_id()).records);
}

TEST(UserAssertion, DisagreeingSourceLosesReputation) {
    TempDir dir;
    auto fetcher = std::make_shared<FakeFetcher>();
    SourceSync sync(two_remote_sources(), dir.path(), fetcher);
    fetcher->set_body(kCoopUrl, "k\t1\thttps://e.com/1\nk\t1\thttps://e.com/2\n");
    sync.refresh(*sync.registry().find(source("coop")));

    sync.record_user_assertion(url("https://e.com/1"), label("k"), LabelValue::Applies);
    EXPECT_EQ(build_trust_model(sync.consolidate()).reputation(source("coop")), 1.0);
    sync.record_user_assertion(url("https://e.com/2"), label("k"), LabelValue::DoesNotApply);
    EXPECT_EQ(build_trust_model(sync.consolidate()).reputation(source("coop")), 0.0);
}
