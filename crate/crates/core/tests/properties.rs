use std::collections::{BTreeMap, BTreeSet, VecDeque};

use proptest::collection::{btree_set, vec};
use proptest::prelude::*;
use url::Url;

use treasure_core::crawl::frontier::{Frontier, QueueDiscipline};
use treasure_core::galaxy::{find_galaxy, find_galaxy_with, region_weight, AnchorImpact, Dot};
use treasure_core::html::{extract_page_elements, parse_html};
use treasure_core::lexicon::{dnumber_digit, dnumber_length};
use treasure_core::text::{build_tf_vector, cosine, tokenize, TermFrequencyVector};
use treasure_core::tgraph::{SamplePage, TGraph, DEFAULT_OSM_THRESHOLD};
use treasure_core::{DNumber, DdcLexicon};

fn code() -> impl Strategy<Value = DNumber> {
    "[0-9]{1,3}(\\.[0-9]{1,3})?".prop_map(|s| DNumber::parse(&s).unwrap())
}

fn dot() -> impl Strategy<Value = Dot> {
    // a small alphabet keeps regions populated and ties frequent
    ("[1-3]{1,5}", any::<bool>()).prop_map(|(digits, is_anchor)| {
        let code = match digits.len() {
            0..=3 => digits,
            _ => format!("{}.{}", &digits[..3], &digits[3..]),
        };
        Dot {
            code: DNumber::parse(&code).unwrap(),
            is_anchor,
        }
    })
}

fn vector() -> impl Strategy<Value = TermFrequencyVector> {
    proptest::collection::btree_map("[a-e]", 1u32..5, 0..6).prop_map(TermFrequencyVector::from_counts)
}

proptest! {
    #[test]
    fn lexicon_round_trips(entries in vec(("[a-z]{1,6}( [a-z]{1,6})?", code()), 0..30)) {
        let mut lex = DdcLexicon::new();
        for (term, c) in &entries {
            lex.insert(term.clone(), c.clone());
        }
        let reloaded = DdcLexicon::load(lex.to_lines().as_bytes()).unwrap();
        prop_assert!(reloaded.diagnostics.is_empty());
        for (term, _) in &entries {
            prop_assert_eq!(reloaded.lexicon.lookup(term), lex.lookup(term));
            prop_assert_eq!(lex.lookup(term), lex.lookup(term));
            for c in lex.lookup(term) {
                prop_assert!(dnumber_length(c) >= 1);
                for i in 0..dnumber_length(c) {
                    prop_assert!(dnumber_digit(c, i).is_ok());
                }
            }
        }
        prop_assert_eq!(reloaded.lexicon, lex);
    }

    #[test]
    fn tf_vectors_are_additive(xs in vec("[a-d]", 0..20), ys in vec("[a-d]", 0..20)) {
        let joined: Vec<String> = xs.iter().chain(&ys).cloned().collect();
        let (a, b, ab) = (build_tf_vector(&xs), build_tf_vector(&ys), build_tf_vector(&joined));
        for t in ["a", "b", "c", "d"] {
            prop_assert_eq!(ab.get(t), a.get(t) + b.get(t));
        }
    }

    #[test]
    fn tokens_are_alphanumeric(text in "\\PC{0,60}") {
        for t in tokenize(&text) {
            prop_assert!(!t.text.is_empty());
            prop_assert!(t.text.chars().all(char::is_alphanumeric), "{:?}", t.text);
        }
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(x in vector(), y in vector()) {
        let (xy, yx) = (cosine(&x, &y), cosine(&y, &x));
        prop_assert_eq!(xy, yx);
        prop_assert!((0.0..=1.0).contains(&xy));
        if !x.is_empty() {
            prop_assert!((cosine(&x, &x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_dots_quadruples_weight(dots in vec(dot(), 1..20)) {
        let doubled: Vec<Dot> = dots.iter().chain(&dots).cloned().collect();
        let (w, w2) = (region_weight(&dots), region_weight(&doubled));
        prop_assert!((w2 - 4.0 * w).abs() <= 1e-9 * w2);
    }

    #[test]
    fn galaxy_prefixes_cover_surviving_dots(dots in vec(dot(), 0..25), depth in 1usize..5) {
        if let Some(g) = find_galaxy(&dots, depth) {
            prop_assert!(!g.prefixes.is_empty());
            for p in &g.prefixes {
                prop_assert!(dots.iter().any(|d| d.code.digits().starts_with(p.as_str())));
                prop_assert_eq!(p.len(), depth);
            }
        }
    }

    #[test]
    fn galaxy_refines_monotonically(dots in vec(dot(), 1..25), depth in 2usize..5) {
        let (Some(deep), Some(shallow)) = (find_galaxy(&dots, depth), find_galaxy(&dots, depth - 1)) else {
            return Ok(());
        };
        for p in &deep.prefixes {
            prop_assert!(shallow.prefixes.contains(&p[..depth - 1]), "{:?} vs {:?}", deep.prefixes, shallow.prefixes);
        }
    }

    #[test]
    fn galaxy_ignores_impact_scale(dots in vec(dot(), 1..25), depth in 1usize..4, scale in prop_oneof![Just(0.5), Just(2.0), Just(3.0), Just(10.0)]) {
        let base = AnchorImpact::default();
        let scaled = AnchorImpact { anchored: base.anchored * scale, plain: base.plain * scale };
        let a = find_galaxy_with(&dots, depth, base).map(|g| g.prefixes);
        let b = find_galaxy_with(&dots, depth, scaled).map(|g| g.prefixes);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn frontier_serves_the_maximum(ops in vec((any::<bool>(), 0usize..40, 1u32..=100), 1..120)) {
        let delta = 0.01;
        let mut f = Frontier::new(QueueDiscipline::Priority, delta).unwrap();
        let mut resident: BTreeMap<usize, (f64, u64)> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        let url = |i: usize| Url::parse(&format!("http://h.test/{i}")).unwrap();
        let naive = |(base, at): (f64, u64), now: u64| (base + delta * (now - at) as f64).min(1.0);
        for (cycle, (enqueue, id, p)) in ops.into_iter().enumerate() {
            let cycle = cycle as u64;
            if enqueue {
                let base = f64::from(p) / 100.0;
                f.enqueue(&url(id), base, cycle).unwrap();
                if seen.insert(id) {
                    resident.insert(id, (base, cycle));
                }
                let eff = f.effective_priority(&url(id), cycle + 7);
                if let Some(eff) = eff {
                    prop_assert!(eff >= resident[&id].0 - 1e-12);
                }
                continue;
            }
            let Some(item) = f.dequeue_highest(cycle) else {
                prop_assert!(resident.is_empty());
                continue;
            };
            let best = resident.values().map(|&r| naive(r, cycle)).fold(0.0, f64::max);
            prop_assert!((item.effective_priority - best).abs() < 1e-9, "{} vs {}", item.effective_priority, best);
            let id: usize = item.url.path()[1..].parse().unwrap();
            prop_assert!(resident.remove(&id).is_some());
        }
        prop_assert_eq!(f.len(), resident.len());
    }

    #[test]
    fn tgraph_levels_match_bfs(
        links in vec(vec(vec(0usize..8, 0..3), 1..3), 2..8),
        targets in btree_set(0usize..8, 1..3),
    ) {
        let n = links.len();
        let targets: BTreeSet<usize> = targets.into_iter().map(|t| t % n).collect();
        let url = |i: usize| Url::parse(&format!("http://g.test/p{i}")).unwrap();
        let mut sample = Vec::new();
        for (i, paras) in links.iter().enumerate() {
            let mut body = format!("<h1>page {i}</h1>");
            for (j, outs) in paras.iter().enumerate() {
                body.push_str(&format!("<p>words{i}x{j}"));
                for o in outs {
                    body.push_str(&format!(" <a href=\"/p{}\">go</a>", o % n));
                }
                body.push_str("</p>");
            }
            let html = format!("<html><body>{body}</body></html>");
            let tree = parse_html(html.as_bytes(), None, 1 << 20).unwrap();
            sample.push(SamplePage { url: url(i), elements: extract_page_elements(&tree, &url(i)) });
        }
        let target_urls: BTreeSet<Url> = targets.iter().map(|&t| url(t)).collect();
        let g = TGraph::build_from_corpus(&sample, &target_urls, DEFAULT_OSM_THRESHOLD).unwrap();

        // page-level BFS over reversed links, then one hop per paragraph
        let mut page_dist: Vec<Option<u32>> = vec![None; n];
        let mut queue = VecDeque::new();
        for &t in &targets {
            page_dist[t] = Some(0);
            queue.push_back(t);
        }
        while let Some(cur) = queue.pop_front() {
            for (src, paras) in links.iter().enumerate() {
                let links_here = paras.iter().any(|outs| outs.iter().any(|o| o % n == cur));
                if !targets.contains(&src) && links_here && page_dist[src].is_none() {
                    page_dist[src] = Some(page_dist[cur].unwrap() + 1);
                    queue.push_back(src);
                }
            }
        }
        for node in g.nodes() {
            let page: usize = node.source_url.path()[2..].parse().unwrap();
            let want = match node.block_index {
                None => Some(0),
                Some(b) => links[page][b].iter().filter_map(|o| page_dist[o % n]).min().map(|d| d + 1),
            };
            match want {
                Some(d) => prop_assert!(!node.unreachable && node.level == d, "node {:?}: level {} want {}", node.block_index, node.level, d),
                None => prop_assert!(node.unreachable),
            }
            for &c in &node.child_ids {
                prop_assert!(g.nodes()[c].level < node.level);
            }
        }
    }
}
