use clickbait::features::{HeuristicTagger, PosTag, Tagger};
use clickbait::textproc::tokenize;

struct Sentence {
    text: String,
    gold: Vec<char>,
}

fn load() -> Vec<Sentence> {
    let raw = include_str!("fixtures/pos_hand_tagged.txt");
    raw.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (words, gold): (Vec<&str>, Vec<char>) = l
                .split_whitespace()
                .map(|t| {
                    let (w, tag) = t.rsplit_once('/').unwrap();
                    (w, tag.chars().next().unwrap())
                })
                .unzip();
            Sentence {
                text: words.join(" "),
                gold,
            }
        })
        .collect()
}

fn coarse(tag: PosTag) -> char {
    match tag {
        PosTag::Noun => 'N',
        PosTag::PropNoun => 'P',
        _ => '_',
    }
}

#[test]
fn fixture_has_twenty_sentences_aligned_with_tokenizer() {
    let sentences = load();
    assert_eq!(sentences.len(), 20);
    for s in &sentences {
        assert_eq!(tokenize(&s.text).tokens.len(), s.gold.len(), "{}", s.text);
    }
}

#[test]
fn heuristic_noun_tags_agree_with_hand_tags() {
    let (mut agree, mut total) = (0, 0);
    let (mut gold_nouns, mut gold_proper, mut got_nouns, mut got_proper) = (0, 0, 0, 0);
    for s in load() {
        let tags = HeuristicTagger.tag(&tokenize(&s.text)).unwrap();
        for (t, g) in tags.iter().zip(&s.gold) {
            let c = coarse(*t);
            agree += usize::from(c == *g);
            total += 1;
            gold_nouns += usize::from(*g == 'N');
            gold_proper += usize::from(*g == 'P');
            got_nouns += usize::from(c == 'N');
            got_proper += usize::from(c == 'P');
        }
    }
    let acc = agree as f64 / total as f64;
    println!("agreement {acc:.3}; nouns {got_nouns}/{gold_nouns}; proper {got_proper}/{gold_proper}");
    assert!(acc >= 0.8, "agreement {acc}");
}

#[test]
fn maria_example() {
    let tags = HeuristicTagger.tag(&tokenize("Maria are mere")).unwrap();
    assert_eq!(tags[0], PosTag::PropNoun);
    assert!(tags.contains(&PosTag::Noun));
}
