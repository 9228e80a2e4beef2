//! sacreBLEU 2.6.0 chrF++ scores (`CHRF(word_order=2)`) and a brute-force
//! n-gram oracle written independently of the library code.

/// (hypothesis, reference, sacreBLEU sentence score).
pub const PINNED: [(&str, &str, f64); 24] = [
    ("The cat sat on the mat.", "The cat is sitting on the mat.", 54.255186),
    ("I would like a cup of coffee, please.", "I'd like a coffee, please.", 73.711284),
    ("Where is the nearest train station?", "Where's the closest railway station?", 39.283326),
    ("He didn't go to school yesterday.", "Yesterday he did not go to school.", 58.291149),
    ("Quick brown foxes jump over lazy dogs!", "The quick brown fox jumps over the lazy dog.", 43.725072),
    ("Aku arep menyang pasar sesuk esuk.", "Aku arep lunga menyang pasar sesuk isuk.", 65.438478),
    ("Sugeng enjing, piye kabare?", "Sugeng enjang, pripun kabaripun?", 38.169594),
    ("Omah iku gedhe banget lan apik.", "Omahe gedhe banget lan resik.", 58.915896),
    ("Mangga pinarak, sampeyan kersa ngunjuk napa?", "Mangga pinarak, panjenengan kersa ngunjuk menapa?", 62.827934),
    ("Я люблю читать книги по вечерам.", "По вечерам я люблю читать книги.", 71.271433),
    ("Москва — столица России.", "Столица России — Москва.", 63.051563),
    ("Сегодня очень холодно, надень шапку!", "Сегодня холодно, надевай шапку.", 56.766994),
    ("Мы поехали на дачу в субботу.", "В субботу мы ездили на дачу.", 46.856587),
    ("Бу китап бик кызыклы.", "Бу китап бик кызык.", 84.388168),
    ("मैं कल बाज़ार जाऊँगा।", "मैं कल बाजार जाऊंगा।", 54.275823),
    ("भारत एक विशाल देश है।", "भारत एक बहुत बड़ा देश है।", 44.304452),
    ("आप कैसे हैं? मैं ठीक हूँ।", "आप कैसे हो? मैं अच्छा हूँ।", 43.701531),
    ("बच्चे पार्क में खेल रहे हैं।", "बच्चे बगीचे में खेल रहे हैं।", 64.758021),
    ("पानी पीना स्वास्थ्य के लिए अच्छा है।", "स्वास्थ्य के लिए पानी पीना ज़रूरी है।", 64.125656),
    ("नमस्ते दुनिया", "नमस्ते, दुनिया!", 51.924905),
    ("完全不同的句子", "The cat sat on the mat.", 0.0),
    ("a", "b", 0.0),
    ("Hello, world!", "Hello, world!", 100.0),
    ("", "Not empty.", 0.0),
];

/// sacreBLEU corpus score over all of `PINNED`.
pub const PINNED_CORPUS: f64 = 55.288819193682926;

/// Counts every n-gram by scanning all windows against all windows; no
/// hashing, no shared code with the library.
pub mod brute {
    fn windows<T: Clone>(seq: &[T], n: usize) -> Vec<Vec<T>> {
        if seq.len() < n {
            return Vec::new();
        }
        (0..=seq.len() - n).map(|i| seq[i..i + n].to_vec()).collect()
    }

    fn occurrences<T: PartialEq>(grams: &[Vec<T>], g: &[T]) -> u64 {
        grams.iter().filter(|x| x.as_slice() == g).count() as u64
    }

    fn order<T: PartialEq + Clone>(hyp: &[T], reference: &[T], n: usize) -> (u64, u64, u64) {
        let h = windows(hyp, n);
        let r = windows(reference, n);
        let mut distinct: Vec<Vec<T>> = Vec::new();
        for g in &h {
            if !distinct.contains(g) {
                distinct.push(g.clone());
            }
        }
        let matched = distinct.iter().map(|g| occurrences(&h, g).min(occurrences(&r, g))).sum();
        let hyp_count = if r.is_empty() { 0 } else { h.len() as u64 };
        (hyp_count, r.len() as u64, matched)
    }

    /// Strings here contain only letters and spaces, so words are plain
    /// whitespace tokens.
    pub fn chrf(hyp: &str, reference: &str, char_order: usize, word_order: usize, beta: f64) -> f64 {
        let hc: Vec<char> = hyp.chars().filter(|c| *c != ' ').collect();
        let rc: Vec<char> = reference.chars().filter(|c| *c != ' ').collect();
        let hw: Vec<&str> = hyp.split(' ').filter(|w| !w.is_empty()).collect();
        let rw: Vec<&str> = reference.split(' ').filter(|w| !w.is_empty()).collect();
        let mut orders = Vec::new();
        for n in 1..=char_order {
            orders.push(order(&hc, &rc, n));
        }
        for n in 1..=word_order {
            orders.push(order(&hw, &rw, n));
        }
        let (mut p, mut r, mut k) = (0.0, 0.0, 0.0);
        for (h, rf, m) in orders {
            if h > 0 && rf > 0 {
                p += m as f64 / h as f64;
                r += m as f64 / rf as f64;
                k += 1.0;
            }
        }
        if k == 0.0 {
            return 0.0;
        }
        p /= k;
        r /= k;
        if p + r == 0.0 {
            return 0.0;
        }
        let b2 = beta * beta;
        100.0 * (1.0 + b2) * p * r / (b2 * p + r)
    }
}
