//! Synthetic data generators shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tweetopic_core::corpus::{Corpus, LabeledTweet};

const CLASS_KEYWORDS: [(&str, [&str; 6]); 6] = [
    ("business", ["market", "shares", "profit", "merger", "invest", "revenue"]),
    ("sports", ["match", "goal", "league", "coach", "striker", "podium"]),
    ("technology", ["kernel", "chip", "robot", "server", "compiler", "gadget"]),
    ("politics", ["vote", "senate", "policy", "ballot", "minister", "treaty"]),
    ("entertainment", ["film", "album", "concert", "actor", "premiere", "sitcom"]),
    ("education", ["campus", "tuition", "lecture", "syllabus", "exam", "scholar"]),
];

const FILLERS: [&str; 8] = [
    "about", "during", "another", "without", "almost", "beyond", "toward", "indeed",
];

/// Raw tweet-like text with hashtags, mentions, elongations, and URLs mixed
/// in, for preprocessing benchmarks.
pub fn raw_tweets(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (_, words) = CLASS_KEYWORDS[i % 6];
            let mut parts: Vec<String> = (0..5)
                .map(|_| words[rng.gen_range(0..6)].to_string())
                .collect();
            match rng.gen_range(0..5) {
                0 => parts.push("#ILoveComputerScience".to_string()),
                1 => parts.push("@someone https://example.com/x".to_string()),
                2 => parts.push("soooo goooood".to_string()),
                3 => parts.push("RT 50% off at 5pm :)".to_string()),
                _ => parts.push(FILLERS[rng.gen_range(0..8)].to_string()),
            }
            parts.join(" ")
        })
        .collect()
}

/// A labeled six-class synthetic corpus.
pub fn synthetic_corpus(per_class: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tweets = Vec::new();
    let mut id = 0usize;
    for (label, words) in CLASS_KEYWORDS {
        for _ in 0..per_class {
            let mut toks: Vec<&str> = (0..4).map(|_| words[rng.gen_range(0..6)]).collect();
            for _ in 0..3 {
                toks.push(FILLERS[rng.gen_range(0..8)]);
            }
            tweets.push(LabeledTweet {
                id: format!("t{id}"),
                text: toks.join(" "),
                label: label.to_string(),
            });
            id += 1;
        }
    }
    Corpus::from_tweets(tweets).expect("synthetic corpus is valid")
}
