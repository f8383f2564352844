use std::sync::Arc;

use geotext_core::geocode::{GeoTables, Geocoder};
use geotext_core::pipeline::input::parse_jsonl;
use geotext_core::pipeline::shard::{merge_shards, read_shard, select_shard, write_shard};
use geotext_core::pipeline::{InputRecord, Pipeline, PipelineConfig, SiteKey, SkipReason};
use geotext_core::store::{Dataset, Store};
use geotext_core::synth::generate;
use geotext_core::timebin::{Granularity, TimeBin};

const NSF_SAMPLE: &str = include_str!("../../../data/samples/nsf_awards.jsonl");
const TWEET_SAMPLE: &str = include_str!("../../../data/samples/android_tweets.jsonl");

fn pipeline(cfg: PipelineConfig) -> Pipeline {
    let corpus = Arc::new(cfg.corpus.load().unwrap());
    Pipeline::new(cfg, corpus, Arc::new(Geocoder::offline(GeoTables::bundled()))).unwrap()
}

fn nsf() -> Vec<InputRecord> {
    parse_jsonl(NSF_SAMPLE.as_bytes()).unwrap()
}

#[test]
fn houston_2008_tags() {
    let store = Store::new(pipeline(PipelineConfig::nsf()).run(&nsf(), 1)).unwrap();
    let site = SiteKey::from_degrees(29.7174, -95.4018);
    let bin = TimeBin::parse_label("2008", Granularity::Year).unwrap();
    let top: Vec<&str> = store.query_cloud(site, bin, 4).iter().map(|t| t.phrase.as_str()).collect();
    assert!(top.contains(&"magnetosphere"), "{top:?}");
    assert!(top.contains(&"reu"), "{top:?}");
}

#[test]
fn nsf_sample_keeps_every_record() {
    let ds = pipeline(PipelineConfig::nsf()).run(&nsf(), 1);
    assert_eq!((ds.manifest.records_read, ds.manifest.records_kept), (12, 12));
    assert!(ds.manifest.skipped.is_empty());
    ds.check().unwrap();
}

#[test]
fn tweet_filters() {
    let input = parse_jsonl(TWEET_SAMPLE.as_bytes()).unwrap();
    let ds = pipeline(PipelineConfig::twitter()).run(&input, 1);
    assert_eq!(ds.manifest.records_read, 8);
    assert_eq!(ds.manifest.records_kept + ds.manifest.skipped.values().sum::<u64>(), 8);
    assert!(ds.manifest.skipped.contains_key(&SkipReason::NonEnglish));
    assert!(ds.bins().unwrap().iter().all(|b| b.granularity() == Granularity::Month));
    // at most three phrases per tweet
    assert!(ds.triples.len() as u64 <= 3 * ds.manifest.records_kept);
}

#[test]
fn dataset_survives_disk() {
    let ds = pipeline(PipelineConfig::nsf()).run(&nsf(), 2);
    let tmp = tempfile::TempDir::new().unwrap();
    let dir = tmp.path().join("ds");
    ds.write_dir(&dir).unwrap();
    let back = Dataset::read_dir(&dir).unwrap();
    assert_eq!(back.manifest_json(), ds.manifest_json());
    assert_eq!(back.triples_tsv(), ds.triples_tsv());
    assert_eq!(back.summaries_tsv(), ds.summaries_tsv());

    // rewriting over an existing directory replaces it
    let other = pipeline(PipelineConfig::nsf()).run(&nsf()[..3], 1);
    other.write_dir(&dir).unwrap();
    assert_eq!(Dataset::read_dir(&dir).unwrap().triples_tsv(), other.triples_tsv());
}

#[test]
fn shards_reduce_to_the_full_run() {
    let p = pipeline(PipelineConfig::nsf());
    let input: Vec<InputRecord> = generate(120, 5).into_iter().map(Ok).collect();
    let full = p.run(&input, 1);
    let mut files = Vec::new();
    for i in 0..3 {
        let agg = p.map_all(&select_shard(&input, i, 3), 1);
        let mut buf = Vec::new();
        write_shard(&agg, p.fingerprint(), Granularity::Year, &mut buf).unwrap();
        let name = format!("shard-{i}");
        files.push((name.clone(), read_shard(std::str::from_utf8(&buf).unwrap(), &name).unwrap()));
    }
    files.reverse();
    let merged = merge_shards(files, p.fingerprint()).unwrap().into_dataset(p.config(), p.fingerprint());
    assert_eq!(merged.triples_tsv(), full.triples_tsv());
    assert_eq!(merged.manifest_json(), full.manifest_json());
}

#[test]
fn append_rejects_other_configs() {
    let ds = pipeline(PipelineConfig::nsf()).run(&nsf(), 1);
    let twitter = pipeline(PipelineConfig::twitter());
    assert!(twitter.append(&ds, &nsf(), 1).is_err());
}
