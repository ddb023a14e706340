use proptest::prelude::*;

use ramified::chains::find_cycle;
use ramified::decomposition::{better_decompose, extract_good_decomposition};
use ramified::fixtures;
use ramified::generate::{random_forest, Masses};
use ramified::io::{
    emit_document, matrix_to_csv, parse_document, parse_matrix_csv, to_dot, to_dot_with_parts,
    Document,
};
use ramified::rational::ratio;
use ramified::splitting::split_single_target;
use ramified::{Error, Matrix};

/// Tokens of the DOT subset we emit: identifiers, quoted strings, numerals,
/// punctuation and `->`.
fn tokens(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        if c.is_whitespace() {
            k += 1;
        } else if c == '"' {
            let mut s = String::from('"');
            k += 1;
            loop {
                match chars.get(k) {
                    None => return Err("unterminated string".into()),
                    Some('\\') => {
                        s.push('\\');
                        s.push(*chars.get(k + 1).ok_or("dangling escape")?);
                        k += 2;
                    }
                    Some('"') => {
                        s.push('"');
                        k += 1;
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        k += 1;
                    }
                }
            }
            out.push(s);
        } else if c == '-' && chars.get(k + 1) == Some(&'>') {
            out.push("->".into());
            k += 2;
        } else if "{}[];,=".contains(c) {
            out.push(c.to_string());
            k += 1;
        } else if c.is_alphanumeric() || c == '_' || c == '.' || c == '-' {
            let start = k;
            while k < chars.len() && (chars[k].is_alphanumeric() || "_.-".contains(chars[k])) {
                if chars[k] == '-' && chars.get(k + 1) == Some(&'>') {
                    break;
                }
                k += 1;
            }
            out.push(chars[start..k].iter().collect());
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

fn is_id(t: &str) -> bool {
    t.starts_with('"')
        || t.chars().all(|c| c.is_alphanumeric() || "_.-".contains(c)) && !t.is_empty()
}

/// `digraph ID { stmt* }` with statements `ID [attrs];`, `ID -> ID [attrs];`
/// and `node|edge|graph [attrs];`.
fn check_dot(text: &str) -> Result<(), String> {
    let t = tokens(text)?;
    let mut k = 0;
    let expect = |k: &mut usize, what: &str| -> Result<(), String> {
        if t.get(*k).map(String::as_str) == Some(what) {
            *k += 1;
            Ok(())
        } else {
            Err(format!(
                "expected {what} at token {}, found {:?}",
                *k,
                t.get(*k)
            ))
        }
    };
    let id = |k: &mut usize| -> Result<(), String> {
        match t.get(*k) {
            Some(s)
                if is_id(s) && !["{", "}", "[", "]", ";", ",", "=", "->"].contains(&s.as_str()) =>
            {
                *k += 1;
                Ok(())
            }
            other => Err(format!("expected an id at token {}, found {other:?}", *k)),
        }
    };
    let attrs = |k: &mut usize| -> Result<(), String> {
        expect(k, "[")?;
        while t.get(*k).map(String::as_str) != Some("]") {
            id(k)?;
            expect(k, "=")?;
            id(k)?;
            if t.get(*k).map(String::as_str) == Some(",") {
                *k += 1;
            }
        }
        expect(k, "]")
    };
    expect(&mut k, "digraph")?;
    id(&mut k)?;
    expect(&mut k, "{")?;
    while t.get(k).map(String::as_str) != Some("}") {
        id(&mut k)?;
        if t.get(k).map(String::as_str) == Some("->") {
            k += 1;
            id(&mut k)?;
        }
        if t.get(k).map(String::as_str) == Some("[") {
            attrs(&mut k)?;
        }
        expect(&mut k, ";")?;
    }
    expect(&mut k, "}")?;
    if k != t.len() {
        return Err("trailing tokens".into());
    }
    Ok(())
}

#[test]
fn dot_output_parses() {
    for (name, _) in fixtures::ALL {
        let doc = parse_document(fixtures::lookup(name).unwrap()).unwrap();
        let dot = to_dot(&doc.network, name);
        check_dot(&dot).unwrap_or_else(|e| panic!("{name}: {e}\n{dot}"));
        assert_eq!(dot.matches("->").count(), doc.network.edges().len());
    }
    let doc = fixtures::example3_1();
    let better = better_decompose(&doc.network, &doc.curves.unwrap()).unwrap();
    let split = split_single_target(&doc.network, &better.measure).unwrap();
    let parts: Vec<_> = split
        .parts
        .iter()
        .map(|p| (p.label.clone(), p.chain.clone()))
        .collect();
    check_dot(&to_dot_with_parts(&doc.network, "split \"3.1\"", &parts)).unwrap();
}

#[test]
fn grammar_rejects_broken_dot() {
    assert!(check_dot("digraph g { a -> ; }").is_err());
    assert!(check_dot("digraph g { a [label=\"x\"] }").is_err());
    assert!(check_dot("digraph g { a -> b [label=\"x]; }").is_err());
    assert!(check_dot("digraph g { a -> b [label=\"x\", color=red]; }").is_ok());
}

#[test]
fn generator_is_reproducible() {
    let emit = |seed| {
        emit_document(&Document {
            network: random_forest(seed, 5, 4, Masses::Rational).unwrap(),
            curves: None,
            matrix: None,
        })
    };
    for seed in [0, 1, 42, u64::MAX] {
        assert_eq!(emit(seed), emit(seed));
    }
}

#[test]
fn fixture_lookup() {
    assert!(fixtures::lookup("ex6_A.csv").is_some());
    assert!(fixtures::lookup("example3_1.toml").is_some());
    assert!(fixtures::lookup("nope").is_none());
    assert_eq!(
        parse_matrix_csv(fixtures::EX6_A_CSV).unwrap(),
        fixtures::ex6_5x5().matrix.unwrap()
    );
    assert_eq!(
        parse_matrix_csv(fixtures::EX6_11X11_A_CSV).unwrap(),
        fixtures::ex6_11x11().matrix.unwrap()
    );
}

#[test]
fn positioned_diagnostics() {
    let text = fixtures::EXAMPLE3_1.replacen("tail = 1,", "tail = 999,", 1);
    match parse_document(&text) {
        Err(Error::Document { line, column, .. }) => {
            let bad_line = text.lines().position(|l| l.contains("999")).unwrap() + 1;
            assert_eq!(line, bad_line);
            assert!(column > 0);
        }
        other => panic!("expected a positioned error, got {other:?}"),
    }
    let csv = "1,2\n3,x/0\n";
    assert!(matches!(
        parse_matrix_csv(csv),
        Err(Error::Document { line: 2, .. })
    ));
}

proptest! {
    #[test]
    fn generated_instances_are_valid_and_cycle_free(seed in any::<u64>(), m in 1usize..8, n in 1usize..8) {
        let t = random_forest(seed, m, n, Masses::Rational).unwrap();
        prop_assert!(t.validate().is_empty());
        prop_assert!(find_cycle(&t).unwrap().is_cycle_free());
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>(), m in 1usize..6, n in 1usize..6) {
        let network = random_forest(seed, m, n, Masses::Rational).unwrap();
        let curves = extract_good_decomposition(&network).unwrap();
        let matrix = curves.representing_matrix(&network).unwrap();
        let doc = Document { network, curves: Some(curves), matrix: Some(matrix) };
        let text = emit_document(&doc);
        let back = parse_document(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(emit_document(&back), text);
    }

    #[test]
    fn csv_round_trips(cells in proptest::collection::vec((0i64..50, 1i64..7), 1..30), cols in 1usize..6) {
        let rows: Vec<Vec<_>> = cells.chunks(cols).filter(|r| r.len() == cols)
            .map(|r| r.iter().map(|&(p, q)| ratio(p, q)).collect()).collect();
        prop_assume!(!rows.is_empty());
        let m = Matrix::from_rows(rows).unwrap();
        prop_assert_eq!(parse_matrix_csv(&matrix_to_csv(&m)).unwrap(), m);
    }
}
