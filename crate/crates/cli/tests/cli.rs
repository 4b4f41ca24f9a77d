use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use textgcn::corpus::{build_vocabulary, load_corpus, CorpusFormat, LabeledCorpus, Task};
use textgcn::embedding::EmbeddingTable;
use textgcn::graph::{build_ws_graph, NormalizeMode};
use textgcn::mtl::{embed_sentences_from_words, SentenceReadout};
use textgcn::synthetic::{two_cluster_corpus, TwoClusterSpec};
use textgcn::GcnModelF64;

const BIN: &str = env!("CARGO_BIN_EXE_textgcn");

// Settings under which the small two-cluster corpus trains to separation.
const FAST: &[&str] = &["--dim", "32", "--learning-rate", "0.02", "--weight-decay", "5e-5", "--dropout", "0"];

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn write(&self, name: &str, contents: &str) -> String {
        fs::write(self.path(name), contents).unwrap();
        self.s(name)
    }

    /// Two-cluster corpus as JSONL.
    fn corpus(&self, n_sentences: usize) -> String {
        let corpus = two_cluster_corpus(&TwoClusterSpec { n_sentences, ..TwoClusterSpec::default() });
        self.write("corpus.jsonl", &to_jsonl(&corpus))
    }
}

fn to_jsonl(corpus: &LabeledCorpus) -> String {
    let mut out = String::new();
    for r in &corpus.records {
        let mut obj = serde_json::Map::new();
        obj.insert("text".into(), Value::from(r.text.clone()));
        for t in Task::ALL {
            obj.insert(t.key().into(), r.labels.get(t).map(Value::from).unwrap_or(Value::Null));
        }
        out.push_str(&Value::Object(obj).to_string());
        out.push('\n');
    }
    out
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).arg("-q").env_remove("TEXTGCN_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn cat<'a>(a: &[&'a str], b: &[&'a str]) -> Vec<&'a str> {
    a.iter().chain(b).copied().collect()
}

#[test]
fn build_graph_counts_nodes_and_is_reproducible() {
    let sb = Sandbox::new();
    let c = sb.write("toy.jsonl", "{\"text\": \"a b c\", \"sa\": 1}\n{\"text\": \"b c d\", \"sa\": 0}\n{\"text\": \"d e\"}\n");
    ok(&["build-graph", "--corpus", &c, "--out", &sb.s("g1")]);
    let stats = json(sb.path("g1/stats.json"));
    assert_eq!(stats["nodes"], 5 + 3);
    assert_eq!(stats["kind"], "ws");
    ok(&["build-graph", "--corpus", &c, "--out", &sb.s("g2")]);
    assert_eq!(fs::read(sb.path("g1/graph.tg1")).unwrap(), fs::read(sb.path("g2/graph.tg1")).unwrap());
    for name in ["config.toml", "vocab.tsv", "run.log", "timing.json"] {
        assert!(sb.path("g1").join(name).exists(), "{name}");
    }
}

#[test]
fn larger_window_never_loses_edges() {
    let sb = Sandbox::new();
    let c = sb.corpus(40);
    let nnz = |w: &str| {
        let out = sb.s(&format!("w{w}"));
        ok(&["build-graph", "--corpus", &c, "--graph-kind", "w", "--window-size", w, "--out", &out]);
        json(sb.path(&format!("w{w}/stats.json")))["nnz"].as_u64().unwrap()
    };
    assert!(nnz("4") >= nnz("2"));
}

#[test]
fn train_respects_task_set_and_lambda_zero() {
    let sb = Sandbox::new();
    let c = sb.corpus(30);
    let base = ["train", "--corpus", &c, "--dim", "8", "--max-epochs", "6", "--patience", "3"];
    ok(&cat(&base, &["--tasks", "sa", "--out", &sb.s("st")]));
    let st = GcnModelF64::load(sb.path("st/model.ckpt")).unwrap();
    assert_eq!(st.heads.iter().map(|h| h.task).collect::<Vec<_>>(), vec![Task::Sa]);
    ok(&cat(&base, &["--tasks", "sa,ei,hs,sar", "--out", &sb.s("mt")]));
    assert_eq!(GcnModelF64::load(sb.path("mt/model.ckpt")).unwrap().heads.len(), 4);

    ok(&cat(&base, &["--lambda", "0", "--out", &sb.s("l0")]));
    let hist = json(sb.path("l0/history.json"));
    for e in hist["epochs"].as_array().unwrap() {
        assert_eq!(e["l_total"], e["l_mse"]);
        assert!(e["l_cla"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn user_errors_exit_with_two() {
    let sb = Sandbox::new();
    let c = sb.corpus(20);
    let missing = run(&["train", "--corpus", &c, "--graph", &sb.s("nope.tg1"), "--out", &sb.s("t")]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.tg1"));
    assert_eq!(code(&run(&["evaluate", "--corpus", &c, "--checkpoint", &sb.s("x.ckpt"), "--out", &sb.s("e")])), 2);
    assert_eq!(code(&run(&["train", "--corpus", &c, "--tasks", "sa,xx", "--out", &sb.s("t")])), 2);
    assert_eq!(code(&run(&["train", "--corpus", &sb.s("absent.jsonl"), "--out", &sb.s("t")])), 2);
    assert_eq!(code(&run(&["train", "--out", &sb.s("t")])), 2);
    assert_eq!(code(&run(&["build-graph", "--corpus", &c, "--graph-kind", "s", "--out", &sb.s("t")])), 2);
    let cfg = sb.write("bad.toml", "[graph]\nwindow = 3\n");
    assert_eq!(code(&run(&["build-graph", "--config", &cfg, "--corpus", &c, "--out", &sb.s("t")])), 2);
    let threads = run_env(&["build-graph", "--corpus", &c, "--out", &sb.s("t")], &[("TEXTGCN_THREADS", "0")]);
    assert_eq!(code(&threads), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);
    let bad = sb.write("bad.jsonl", "{\"text\": \"a\", \"sa\": 7}\n");
    assert_eq!(code(&run(&["build-graph", "--corpus", &bad, "--out", &sb.s("t")])), 2);
}

#[test]
fn checkpoint_must_match_graph() {
    let sb = Sandbox::new();
    let c = sb.corpus(20);
    ok(&["train", "--corpus", &c, "--dim", "4", "--max-epochs", "2", "--patience", "1", "--out", &sb.s("t")]);
    let other = sb.corpus(24);
    let out = run(&["evaluate", "--corpus", &other, "--checkpoint", &sb.s("t/model.ckpt"), "--out", &sb.s("e")]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn separable_corpus_scores_perfectly_and_reruns_identically() {
    let sb = Sandbox::new();
    let c = sb.corpus(80);
    let tasks = ["--tasks", "sa,hs,sar"];
    ok(&cat(&cat(&["train", "--corpus", &c, "--out", &sb.s("t")], FAST), &tasks));
    let ck = sb.s("t/model.ckpt");
    for out in ["e1", "e2"] {
        ok(&["evaluate", "--corpus", &c, "--checkpoint", &ck, "--out", &sb.s(out)]);
    }
    let report = json(sb.path("e1/report.json"));
    let means = report["mean"].as_array().unwrap();
    assert_eq!(means.len(), 3);
    for m in means {
        assert_eq!(m["macro_f1"], 1.0, "{m}");
        assert_eq!(m["weighted_f1"], 1.0, "{m}");
    }
    for f in ["report.json", "report.txt", "confusion/sa.csv", "confusion/sa_percent.csv", "confusion/fold0_hs.csv"] {
        assert_eq!(fs::read(sb.path("e1").join(f)).unwrap(), fs::read(sb.path("e2").join(f)).unwrap(), "{f}");
    }
    let cm = fs::read_to_string(sb.path("e1/confusion/sa.csv")).unwrap();
    assert!(cm.starts_with("gold\\pred,Negative,Positive\n"));
}

#[test]
fn cross_validation_reports_every_fold() {
    let sb = Sandbox::new();
    let c = sb.corpus(30);
    ok(&["evaluate", "--corpus", &c, "--cross-validate", "--folds", "3", "--dim", "8", "--max-epochs", "4", "--patience", "2", "--out", &sb.s("cv")]);
    let report = json(sb.path("cv/report.json"));
    assert_eq!(report["folds"].as_array().unwrap().len(), 3);
    let n: u64 = report["folds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["tasks"].as_array().unwrap().iter().find(|t| t["task"] == "sa").unwrap()["n_evaluated"].as_u64().unwrap())
        .sum();
    assert_eq!(n, 30);
    let text = fs::read_to_string(sb.path("cv/report.txt")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("mean   sa ")), "{text}");
}

fn read_vec(path: PathBuf) -> EmbeddingTable<f64> {
    EmbeddingTable::read_word2vec(path).unwrap()
}

#[test]
fn embeddings_match_the_checkpoint() {
    let sb = Sandbox::new();
    let c = sb.corpus(24);
    ok(&["train", "--corpus", &c, "--dim", "6", "--max-epochs", "5", "--patience", "2", "--out", &sb.s("t")]);
    let ck = sb.s("t/model.ckpt");
    for target in ["words", "sentences-gae", "sentences-avg"] {
        ok(&["embed", "--corpus", &c, "--checkpoint", &ck, "--target", target, "--out", &sb.s("emb")]);
    }
    let mut corpus = load_corpus(&c, CorpusFormat::Jsonl).unwrap();
    let vocab = build_vocabulary(&mut corpus, 1).unwrap();
    let graph = build_ws_graph(&corpus, &vocab, 3, NormalizeMode::SymRenorm).unwrap();
    let model = GcnModelF64::load(&ck).unwrap();
    let z = model.node_embeddings(&graph).unwrap();
    let close = |a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>| {
        assert_eq!(a.dim(), b.dim());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{x} vs {y}");
        }
    };

    let words = read_vec(sb.path("emb/words.vec"));
    assert_eq!(words.keys(), vocab.tokens());
    close(words.vectors(), &z.slice(ndarray::s![..vocab.len(), ..]).to_owned());

    let gae = read_vec(sb.path("emb/sentences-gae.vec"));
    assert_eq!(gae.len(), corpus.len());
    let readout = SentenceReadout::for_graph(&graph, &corpus).unwrap();
    close(gae.vectors(), &readout.apply(z.view()).unwrap());

    let avg = read_vec(sb.path("emb/sentences-avg.vec"));
    assert_eq!(avg.len(), corpus.len());
    let expected = embed_sentences_from_words(z.slice(ndarray::s![..vocab.len(), ..]), &corpus).unwrap();
    close(avg.vectors(), &expected);
}

#[test]
fn neighbors_rank_duplicates_first_and_clamp_k() {
    let sb = Sandbox::new();
    let v = sb.write("v.vec", "4 2\ncat 1 0\nfeline 1 0\ndog 0.6 0.8\ncar 0 1\n");
    let out = ok(&["neighbors", "--embeddings", &v, "--query", "cat"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "1\tfeline\t1.000000");
    let out = ok(&["neighbors", "--embeddings", &v, "--query", "cat", "-k", "1", "--format", "json"]);
    let j: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(j["neighbors"].as_array().unwrap().len(), 1);
    let miss = run(&["neighbors", "--embeddings", &v, "--query", "cot"]);
    assert_eq!(code(&miss), 2);
    assert!(String::from_utf8_lossy(&miss.stderr).contains("cat"));
}

#[test]
fn sweep_writes_rows_in_lambda_order() {
    let sb = Sandbox::new();
    let c = sb.corpus(30);
    ok(&["sweep-lambda", "--corpus", &c, "--lambdas", "0.5,0,1", "--dim", "8", "--max-epochs", "4", "--patience", "2", "--out", &sb.s("sw")]);
    let csv = fs::read_to_string(sb.path("sw/sweep.csv")).unwrap();
    let lambdas: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(lambdas, ["0.5", "0", "1"]);
    let series = fs::read_to_string(sb.path("sw/sweep_series.csv")).unwrap();
    assert!(series.lines().count() > 3);
    assert_eq!(code(&run(&["sweep-lambda", "--corpus", &c, "--lambdas", "0,abc", "--out", &sb.s("x")])), 2);
}

#[test]
fn walks_per_window_size_and_thread_count_independent() {
    let sb = Sandbox::new();
    let c = sb.corpus(20);
    let args = |out: &str| {
        vec![
            "walks".to_string(), "--corpus".into(), c.clone(), "--window-sizes".into(), "2,3".into(),
            "--walks-per-node".into(), "3".into(), "--walk-length".into(), "8".into(), "--q".into(), "0.5".into(),
            "--walk-dim".into(), "8".into(), "--sgns-epochs".into(), "2".into(), "--evaluate".into(), "--folds".into(),
            "2".into(), "--out".into(), sb.s(out),
        ]
    };
    let one: Vec<String> = args("one");
    let four: Vec<String> = args("four");
    let r1 = run_env(&one.iter().map(String::as_str).collect::<Vec<_>>(), &[("TEXTGCN_THREADS", "1")]);
    let r4 = run_env(&four.iter().map(String::as_str).collect::<Vec<_>>(), &[("TEXTGCN_THREADS", "4")]);
    assert!(r1.status.success() && r4.status.success(), "{}", String::from_utf8_lossy(&r1.stderr));
    let stats_nodes = {
        ok(&["build-graph", "--corpus", &c, "--window-size", "2", "--out", &sb.s("g")]);
        json(sb.path("g/stats.json"))["nodes"].as_u64().unwrap() as usize
    };
    for ws in ["ws2", "ws3"] {
        let walks = fs::read_to_string(sb.path("one").join(ws).join("walks.txt")).unwrap();
        assert_eq!(walks.lines().count(), stats_nodes * 3);
        assert!(walks.lines().all(|l| l.split_whitespace().count() == 8));
        for f in ["walks.txt", "embeddings.vec", "sgns_loss.csv", "report.json", "config.toml"] {
            assert_eq!(
                fs::read(sb.path("one").join(ws).join(f)).unwrap(),
                fs::read(sb.path("four").join(ws).join(f)).unwrap(),
                "{ws}/{f}"
            );
        }
    }
    let ws3 = fs::read_to_string(sb.path("one/ws3/config.toml")).unwrap();
    assert!(ws3.contains("window_size = 3"));
    let summary = fs::read_to_string(sb.path("one/summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("2,sa,")) && summary.lines().any(|l| l.starts_with("3,sa,")));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let sb = Sandbox::new();
    let c = sb.corpus(24);
    ok(&["train", "--corpus", &c, "--dim", "5", "--lambda", "0.7", "--max-epochs", "4", "--patience", "2", "--seed", "3", "--out", &sb.s("a")]);
    let cfg = sb.s("a/config.toml");
    ok(&["train", "--config", &cfg, "--out", &sb.s("b")]);
    for f in ["config.toml", "model.ckpt", "history.csv"] {
        assert_eq!(fs::read(sb.path("a").join(f)).unwrap(), fs::read(sb.path("b").join(f)).unwrap(), "{f}");
    }
    let text = fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("lambda = 0.7") && text.contains("seed = 3"));
}

#[test]
fn prebuilt_graph_gives_the_same_model() {
    let sb = Sandbox::new();
    let c = sb.corpus(24);
    ok(&["build-graph", "--corpus", &c, "--graph-kind", "w", "--out", &sb.s("g")]);
    let common = ["train", "--corpus", &c, "--graph-kind", "w", "--dim", "5", "--max-epochs", "3", "--patience", "1"];
    ok(&cat(&common, &["--out", &sb.s("built")]));
    ok(&cat(&common, &["--graph", &sb.s("g/graph.tg1"), "--out", &sb.s("read")]));
    assert_eq!(fs::read(sb.path("built/model.ckpt")).unwrap(), fs::read(sb.path("read/model.ckpt")).unwrap());
}

#[test]
fn sentence_graph_from_word_vectors() {
    let sb = Sandbox::new();
    let c = sb.corpus(20);
    let mut corpus = load_corpus(&c, CorpusFormat::Jsonl).unwrap();
    let vocab = build_vocabulary(&mut corpus, 1).unwrap();
    let mut vec = format!("{} 2\n", vocab.len());
    for t in vocab.tokens() {
        let x = if t.starts_with("alpha") { "1 0.1" } else { "0.1 1" };
        vec.push_str(&format!("{t} {x}\n"));
    }
    let v = sb.write("wv.vec", &vec);
    ok(&["build-graph", "--corpus", &c, "--graph-kind", "s", "--word-vectors", &v, "--k-neighbors", "3", "--out", &sb.s("g")]);
    let stats = json(sb.path("g/stats.json"));
    assert_eq!(stats["kind"], "s");
    assert_eq!(stats["nodes"], 20);
    assert_eq!(stats["words"], 0);
}
