//! Study sessions: grounding, retrieval, quiz structure and scoring.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use learnmate_core::canonical;
use learnmate_core::clock::ManualClock;
use learnmate_core::corpus::{retrieve_segments, tokenize, Corpus, CorpusError, Cue, Transcript};
use learnmate_core::domain::StudyPlan;
use learnmate_core::planmate::{generate_plan, PlanOptions};
use learnmate_core::provider::schema::ids;
use learnmate_core::provider::{FixtureAuthor, PromptEnvelope, Provider, ProviderError, RawCompletion};
use learnmate_core::studymate::{
    format_percent, score_quiz, QuizQuestion, QuizSpec, ScopeFlag, SessionContext, SessionState, StudyConfig,
    StudyError, Tier,
};

use common::gen;

fn corpus() -> Corpus {
    Corpus::load(&common::fixtures().join("manifest.json")).unwrap()
}

fn plan(corpus: &Corpus) -> StudyPlan {
    let created_at = common::at("2025-09-05T12:00:00Z");
    let options = PlanOptions::new("p1", created_at.date_naive(), created_at);
    generate_plan(&common::profile(), corpus.manifest(), &common::author(), &options).unwrap()
}

fn clock() -> ManualClock {
    ManualClock::with_tick(common::at("2025-09-08T00:00:00Z"), Duration::seconds(30))
}

fn active(plan: &StudyPlan, session: &str, corpus: &Corpus, clock: &ManualClock) -> SessionContext {
    let mut ctx = SessionContext::scheduled(plan, session).unwrap();
    ctx.start(&common::profile(), corpus, Vec::new(), &common::author(), clock).unwrap();
    ctx
}

/// Content words, using the library only to recognise stopwords one word at
/// a time.
fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| !tokenize(w).is_empty())
        .collect()
}

fn overlap(query: &[String], cue: &[String]) -> usize {
    let mut pool = cue.to_vec();
    let mut n = 0;
    for q in query {
        if let Some(i) = pool.iter().position(|c| c == q) {
            pool.swap_remove(i);
            n += 1;
        }
    }
    n
}

/// Every cue with positive overlap, best first.
fn ranked(query: &[String], transcripts: &[&Transcript]) -> Vec<(usize, u64, String, usize)> {
    let mut hits = Vec::new();
    for t in transcripts {
        for (i, cue) in t.cues.iter().enumerate() {
            let n = overlap(query, &words(&cue.text));
            if n > 0 {
                hits.push((n, cue.start_ms, t.lesson_id.clone(), i));
            }
        }
    }
    hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    hits
}

#[test]
fn new_stone_age_question_cites_the_cue_at_275_seconds() {
    grounding_fidelity();
}

pub fn grounding_fidelity() {
    let corpus = corpus();
    let plan = plan(&corpus);
    let clock = clock();
    let mut ctx = active(&plan, "s1", &corpus, &clock);
    let answer = ctx
        .ask("How did the New Stone Age society form?", &corpus, &common::author(), &clock, &StudyConfig::default())
        .unwrap();
    assert_eq!(answer.scope_flag, ScopeFlag::InScope);
    let top = &answer.citations[0];
    assert_eq!((top.lesson_id.as_str(), top.cue_index, top.start_s), ("era2-l1", 5, 275.0));
    assert_eq!(corpus.cue("era2-l1", 5).unwrap().start_ms, 275_000);
    assert!(answer.text.contains("At 4:35 "), "{}", answer.text);
}

#[test]
fn retrieval_matches_brute_force_ranking() {
    const VOCAB: &[&str] = &[
        "farming", "Farming", "village", "surplus", "river", "the", "of", "and", "stone", "age", "trade",
        "writing", "grain", "2", "cities",
    ];
    let mut rng = gen::rng(0x5e6);
    let sentence = |rng: &mut ChaCha8Rng, max: usize| -> String {
        (0..rng.gen_range(0..=max)).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
    };
    for case in 0..400 {
        let transcripts: Vec<Transcript> = ["b", "a", "d", "c"][..rng.gen_range(1..=4)]
            .iter()
            .map(|lesson| Transcript {
                lesson_id: lesson.to_string(),
                cues: (0..rng.gen_range(1..12))
                    .map(|_| {
                        let start_ms = rng.gen_range(0..20) * 5000;
                        Cue {
                            start_ms,
                            end_ms: start_ms + 4000,
                            text: sentence(&mut rng, 10),
                        }
                    })
                    .collect(),
            })
            .collect();
        let refs: Vec<&Transcript> = transcripts.iter().collect();
        let query = format!("{}?", sentence(&mut rng, 6));
        let k = rng.gen_range(1..6);
        let query_words = words(&query);
        let got = retrieve_segments(&query, refs.iter().copied(), k);
        if query_words.is_empty() {
            assert_eq!(got, Err(CorpusError::EmptyQuery), "case {case}");
            continue;
        }
        let got: Vec<(String, usize, f64, f64)> = got
            .unwrap()
            .into_iter()
            .map(|h| (h.lesson_id, h.cue_index, h.start_s, h.score))
            .collect();
        let want: Vec<(String, usize, f64, f64)> = ranked(&query_words, &refs)
            .into_iter()
            .take(k)
            .map(|(n, start, lesson, i)| (lesson, i, start as f64 / 1000.0, n as f64 / query_words.len() as f64))
            .collect();
        assert_eq!(got, want, "case {case}: {query}");
    }
}

#[test]
fn scope_flag_follows_the_top_score_threshold() {
    let corpus = corpus();
    let plan = plan(&corpus);
    let clock = clock();
    let mut ctx = active(&plan, "s1", &corpus, &clock);
    let lessons = ctx.lesson_ids.clone();
    let scoped: Vec<&Transcript> = corpus.scoped(lessons.iter().map(String::as_str));

    let mut vocab: BTreeSet<String> = BTreeSet::new();
    for t in corpus.transcripts() {
        for cue in &t.cues {
            vocab.extend(cue.text.split_whitespace().map(str::to_string));
        }
    }
    vocab.extend(["pizza", "recipe", "quantum", "guitar", "the", "how", "why"].map(String::from));
    let vocab: Vec<String> = vocab.into_iter().collect();

    let mut rng = gen::rng(0x5c0);
    let (mut inside, mut outside) = (0, 0);
    for case in 0..400 {
        let query: Vec<&str> = (0..rng.gen_range(1..=8)).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect();
        let query = query.join(" ");
        let query_words = words(&query);
        let before = ctx.clone();
        let result = ctx.ask(&query, &corpus, &common::author(), &clock, &StudyConfig::default());
        if query_words.is_empty() {
            assert_eq!(result, Err(StudyError::EmptyQuery), "case {case}");
            assert_eq!(ctx, before);
            continue;
        }
        let answer = result.unwrap();
        let total = query_words.len();
        let hits = ranked(&query_words, &scoped);
        let top = hits.first().map_or(0, |h| h.0);
        // 0.15 as an exact fraction.
        let in_scope = top * 20 >= total * 3;
        let want_flag = if in_scope { ScopeFlag::InScope } else { ScopeFlag::OutOfScope };
        assert_eq!(answer.scope_flag, want_flag, "case {case}: {query}");
        let want: Vec<(String, usize)> = if in_scope {
            hits.iter().take(3).filter(|h| h.0 * 20 >= total * 3).map(|h| (h.2.clone(), h.3)).collect()
        } else {
            Vec::new()
        };
        let got: Vec<(String, usize)> = answer.citations.iter().map(|c| (c.lesson_id.clone(), c.cue_index)).collect();
        assert_eq!(got, want, "case {case}: {query}");
        match answer.scope_flag {
            ScopeFlag::InScope => inside += 1,
            ScopeFlag::OutOfScope => {
                outside += 1;
                assert!(answer.text.starts_with(learnmate_core::studymate::OUT_OF_SCOPE_NOTICE));
            }
        }
    }
    assert!(inside > 50 && outside > 50, "in {inside}, out {outside}");
}

const QUESTIONS: &[&str] = &[
    "How did the New Stone Age society form?",
    "Why did farming create a food surplus?",
    "What did early cities trade?",
    "Why were rivers important to early civilizations?",
    "How did writing begin?",
    "What is a good pizza recipe?",
    "Who ruled the first empires?",
    "What tools did Neolithic villages use?",
];

#[test]
fn hundred_scripted_sessions_each_yield_four_questions_of_four_options() {
    structural_fidelity();
}

pub fn structural_fidelity() {
    let corpus = corpus();
    let plan = plan(&corpus);
    let mut rng = gen::rng(100);
    let mut violations = Vec::new();
    for case in 0..100 {
        let clock = clock();
        let session = plan.sessions.choose(&mut rng).unwrap().session_id.clone();
        let mut ctx = active(&plan, &session, &corpus, &clock);
        for _ in 0..rng.gen_range(0..=4) {
            let question = QUESTIONS.choose(&mut rng).unwrap();
            let answer = ctx.ask(question, &corpus, &common::author(), &clock, &StudyConfig::default()).unwrap();
            if rng.gen_bool(0.5) {
                let items = ctx
                    .expand(&answer.answer_id, Tier::PracticeQuestions, &corpus, &common::author(), &clock)
                    .unwrap()
                    .items;
                assert!(!items.is_empty());
                for item in items {
                    assert_eq!(item.options.len(), 4);
                    assert!(item.answer_index < 4);
                }
            }
        }
        let quiz = ctx.end(&corpus, &common::author(), &clock, &StudyConfig::default()).unwrap();
        if quiz.questions.len() != 4 {
            violations.push(format!("case {case}: {} questions", quiz.questions.len()));
        }
        for (i, q) in quiz.questions.iter().enumerate() {
            if q.options.len() != 4 || q.correct_index >= 4 {
                violations.push(format!("case {case} q{i}: {} options, key {}", q.options.len(), q.correct_index));
            }
            for r in &q.source_refs {
                assert!(ctx.lesson_ids.contains(&r.lesson_id), "case {case}: {}", r.lesson_id);
            }
        }
        let public = canonical::to_string(&quiz.redacted());
        assert!(!public.contains("correct_index"));
        let answers: Vec<usize> = (0..4).map(|_| rng.gen_range(0..4)).collect();
        let result = ctx.submit_quiz(&answers, &clock).unwrap();
        assert_eq!(result.total, 4);
        assert_eq!(ctx.state, SessionState::Completed);
    }
    assert!(violations.is_empty(), "{violations:#?}");
}

/// Replies to the quiz request with a fixed text and defers everything else.
struct QuizReply {
    author: FixtureAuthor,
    quiz: String,
}

impl Provider for QuizReply {
    fn name(&self) -> &str {
        "quiz-reply"
    }

    fn send(&self, envelope: &PromptEnvelope) -> Result<RawCompletion, ProviderError> {
        if envelope.response_schema_id() == ids::QUIZ {
            Ok(RawCompletion {
                text: self.quiz.clone(),
                latency_ms: 0,
            })
        } else {
            self.author.send(envelope)
        }
    }
}

fn non_blank(v: &Value) -> bool {
    v.as_str().is_some_and(|s| !s.trim().is_empty())
}

/// Independent acceptance rule for a quiz reply in session s1.
fn quiz_acceptable(value: &Value, corpus: &Corpus, lessons: &[String]) -> bool {
    let Some(questions) = value.get("questions").and_then(Value::as_array) else {
        return false;
    };
    questions.len() == 4
        && questions.iter().all(|q| {
            let options_ok = q
                .get("options")
                .and_then(Value::as_array)
                .is_some_and(|o| o.len() == 4 && o.iter().all(non_blank));
            let key_ok = q.get("correct_index").and_then(Value::as_u64).is_some_and(|k| k < 4);
            let refs_ok = q.get("source_refs").and_then(Value::as_array).is_some_and(|refs| {
                !refs.is_empty()
                    && refs.iter().all(|r| {
                        let lesson = r.get("lesson_id").and_then(Value::as_str).unwrap_or("");
                        let cue = r.get("cue_index").and_then(Value::as_u64);
                        lessons.iter().any(|l| l == lesson)
                            && cue.is_some_and(|c| (c as usize) < corpus.transcript(lesson).unwrap().cues.len())
                    })
            });
            q.get("stem").is_some_and(non_blank)
                && q.get("concept_tag").is_some_and(non_blank)
                && options_ok
                && key_ok
                && refs_ok
        })
}

fn base_quiz() -> Value {
    let questions: Vec<Value> = (0..4)
        .map(|i| {
            json!({
                "stem": format!("Question {i}?"),
                "options": ["w", "x", "y", "z"],
                "correct_index": i % 4,
                "concept_tag": format!("tag-{}", i % 2),
                "source_refs": [{"lesson_id": if i % 2 == 0 { "era2-l1" } else { "era2-l2" }, "cue_index": i}],
            })
        })
        .collect();
    json!({ "questions": questions })
}

fn mutate(rng: &mut ChaCha8Rng, quiz: &mut Value) {
    let questions = quiz["questions"].as_array_mut().unwrap();
    if questions.is_empty() {
        return;
    }
    let i = rng.gen_range(0..questions.len());
    let q = &mut questions[i];
    match rng.gen_range(0..17) {
        0 => {
            questions.remove(i);
        }
        1 => {
            let copy = q.clone();
            questions.push(copy);
        }
        2 => {
            q["options"].as_array_mut().unwrap().pop();
        }
        3 => q["options"].as_array_mut().unwrap().push(json!("extra")),
        4 => q["correct_index"] = json!(rng.gen_range(-2i64..7)),
        5 => q["correct_index"] = json!("1"),
        6 => q["stem"] = json!(["", "   "][rng.gen_range(0..2)]),
        7 => {
            q.as_object_mut().unwrap().remove("concept_tag");
        }
        8 => q["source_refs"] = json!([]),
        9 => q["source_refs"][0]["lesson_id"] = json!("era2-l3"),
        10 => q["source_refs"][0]["cue_index"] = json!(rng.gen_range(0..40)),
        11 => q["hint"] = json!("not part of the schema"),
        12 => q["options"][rng.gen_range(0..3)] = json!(""),
        13 => q["correct_index"] = json!(1.5),
        14 => q["stem"] = Value::Null,
        15 => q["source_refs"][0]["lesson_id"] = json!(["era2-l1", "era2-l2"][rng.gen_range(0..2)]),
        _ => {}
    }
}

#[test]
fn fuzzed_quiz_replies_are_accepted_iff_the_oracle_accepts() {
    let corpus = corpus();
    let plan = plan(&corpus);
    let clock = clock();
    let ctx = active(&plan, "s1", &corpus, &clock);
    let mut rng = gen::rng(0x9f2);
    let (mut accepted, mut rejected) = (0, 0);
    for case in 0..600 {
        let mut quiz = base_quiz();
        for _ in 0..rng.gen_range(0..=3) {
            mutate(&mut rng, &mut quiz);
        }
        let mut text = quiz.to_string();
        if rng.gen_bool(0.2) {
            text = format!("```json\n{text}\n```");
        }
        let provider = QuizReply {
            author: common::author(),
            quiz: text,
        };
        let mut attempt = ctx.clone();
        let got = attempt.end(&corpus, &provider, &clock, &StudyConfig::default());
        let want = quiz_acceptable(&quiz, &corpus, &ctx.lesson_ids);
        match got {
            Ok(spec) => {
                assert!(want, "case {case}: accepted {quiz}");
                accepted += 1;
                for (q, raw) in spec.questions.iter().zip(quiz["questions"].as_array().unwrap()) {
                    assert_eq!(q.stem, raw["stem"].as_str().unwrap());
                    assert_eq!(q.correct_index as u64, raw["correct_index"].as_u64().unwrap());
                    let cue = raw["source_refs"][0]["cue_index"].as_u64().unwrap() as usize;
                    let lesson = raw["source_refs"][0]["lesson_id"].as_str().unwrap();
                    assert_eq!(q.source_refs[0].start_s, corpus.cue(lesson, cue).unwrap().start_s());
                }
            }
            Err(StudyError::Provider(ProviderError::Schema { raw_texts, .. })) => {
                assert!(!want, "case {case}: rejected {quiz}");
                assert_eq!(raw_texts.len(), 2);
                assert_eq!(attempt, ctx, "a failed end leaves the session untouched");
                rejected += 1;
            }
            Err(e) => panic!("case {case}: {e}"),
        }
    }
    assert!(accepted > 50 && rejected > 200, "accepted {accepted}, rejected {rejected}");
}

fn spec(tags: &[String], keys: &[usize]) -> QuizSpec {
    QuizSpec {
        quiz_id: "q".into(),
        session_id: "s".into(),
        questions: tags
            .iter()
            .zip(keys)
            .map(|(tag, key)| QuizQuestion {
                stem: "?".into(),
                options: vec!["a".into(), "b".into(), "c".into(), "d".into()],
                correct_index: *key,
                concept_tag: tag.clone(),
                source_refs: Vec::new(),
            })
            .collect(),
    }
}

#[test]
fn three_of_seven_displays_42_9_percent() {
    score_formatting();
}

pub fn score_formatting() {
    assert_eq!(format_percent(3, 7), "42.9%");
    let tags: Vec<String> = (0..7).map(|i| format!("c{}", i % 3)).collect();
    let keys = [0, 1, 2, 3, 0, 1, 2];
    let answers = [0, 1, 2, 0, 1, 2, 3];
    let result = score_quiz(&spec(&tags, &keys), &answers).unwrap();
    assert_eq!((result.correct, result.total), (3, 7));
    assert_eq!(result.score_display, "42.9%");
}

fn percent_oracle(correct: u32, total: u32) -> String {
    if total == 0 {
        return "0.0%".into();
    }
    let tenths = (f64::from(correct) * 1000.0 / f64::from(total) + 0.5).floor() as u64;
    format!("{}.{}%", tenths / 10, tenths % 10)
}

proptest! {
    #[test]
    fn percent_rounds_half_up(total in 1u32..400, seed in 0u32..400) {
        let correct = seed % (total + 1);
        prop_assert_eq!(format_percent(correct, total), percent_oracle(correct, total));
    }

    #[test]
    fn scores_and_tallies_match_a_recount(
        questions in prop::collection::vec((0usize..4, 0usize..4, 0usize..4), 1..12),
        extra in prop::option::of(0usize..6),
        short in any::<bool>(),
    ) {
        let tags: Vec<String> = questions.iter().map(|q| format!("concept-{}", q.0)).collect();
        let keys: Vec<usize> = questions.iter().map(|q| q.1).collect();
        let mut answers: Vec<usize> = questions.iter().map(|q| q.2).collect();
        if let Some(bad) = extra {
            let at = bad % answers.len();
            answers[at] = 4 + bad;
        }
        if short {
            answers.pop();
        }
        let spec = spec(&tags, &keys);
        let got = score_quiz(&spec, &answers);
        if answers.len() != keys.len() {
            prop_assert_eq!(got, Err(StudyError::LengthMismatch { expected: keys.len(), got: answers.len() }));
            return Ok(());
        }
        if let Some(q) = answers.iter().position(|a| *a >= 4) {
            prop_assert_eq!(got, Err(StudyError::IndexOutOfRange { question: q, index: answers[q] }));
            return Ok(());
        }
        let result = got.unwrap();
        let correct = keys.iter().zip(&answers).filter(|(k, a)| k == a).count() as u32;
        prop_assert_eq!(result.correct, correct);
        prop_assert_eq!(result.total, keys.len() as u32);
        prop_assert_eq!(&result.score_display, &percent_oracle(correct, keys.len() as u32));
        prop_assert_eq!(result.per_concept.values().map(|t| t.asked).sum::<u32>(), result.total);
        prop_assert_eq!(result.per_concept.values().map(|t| t.correct).sum::<u32>(), result.correct);
        let mut weak = BTreeSet::new();
        for (i, tag) in tags.iter().enumerate() {
            let tally = &result.per_concept[tag];
            prop_assert_eq!(tally.asked as usize, tags.iter().filter(|t| *t == tag).count());
            if keys[i] != answers[i] {
                weak.insert(tag.clone());
            }
        }
        prop_assert_eq!(result.weak_concepts(), weak.into_iter().collect::<Vec<_>>());
    }
}

#[derive(Debug, Clone)]
enum Op {
    Start,
    Ask(usize),
    AskBlank,
    Expand(usize, Tier),
    End,
    Submit(Vec<usize>),
    Abandon,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        Just(Op::Start),
        (0..QUESTIONS.len()).prop_map(Op::Ask),
        Just(Op::AskBlank),
        (0usize..4, prop::sample::select(Tier::ALL.to_vec())).prop_map(|(i, t)| Op::Expand(i, t)),
        Just(Op::End),
        prop::collection::vec(0usize..5, 3..=5).prop_map(Op::Submit),
        Just(Op::Abandon),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn session_state_machine_matches_the_model(ops in prop::collection::vec(op(), 1..20)) {
        let corpus = corpus();
        let plan = plan(&corpus);
        let clock = clock();
        let provider = common::author();
        let config = StudyConfig::default();
        let mut ctx = SessionContext::scheduled(&plan, "s1").unwrap();
        let mut state = SessionState::Scheduled;
        let mut filled: Vec<BTreeSet<Tier>> = Vec::new();
        for op in ops {
            let before = ctx.clone();
            let (ok, next) = match &op {
                Op::Start => (
                    ctx.start(&common::profile(), &corpus, Vec::new(), &provider, &clock).is_ok(),
                    (state == SessionState::Scheduled).then_some(SessionState::Active),
                ),
                Op::Ask(i) => {
                    let ok = ctx.ask(QUESTIONS[*i], &corpus, &provider, &clock, &config).is_ok();
                    let legal = state == SessionState::Active;
                    if legal {
                        filled.push(BTreeSet::new());
                    }
                    (ok, legal.then_some(state))
                }
                Op::AskBlank => (ctx.ask("the of and", &corpus, &provider, &clock, &config).is_ok(), None),
                Op::Expand(i, tier) => {
                    let ok = ctx.expand(&format!("a{}", i + 1), *tier, &corpus, &provider, &clock).is_ok();
                    let legal = state == SessionState::Active && *i < filled.len() && filled[*i].insert(*tier);
                    (ok, legal.then_some(state))
                }
                Op::End => (
                    ctx.end(&corpus, &provider, &clock, &config).is_ok(),
                    (state == SessionState::Active).then_some(SessionState::Quizzing),
                ),
                Op::Submit(answers) => (
                    ctx.submit_quiz(answers, &clock).is_ok(),
                    (state == SessionState::Quizzing && answers.len() == 4 && answers.iter().all(|a| *a < 4))
                        .then_some(SessionState::Completed),
                ),
                Op::Abandon => (
                    ctx.abandon(&clock).is_ok(),
                    (state == SessionState::Active).then_some(SessionState::Abandoned),
                ),
            };
            prop_assert_eq!(ok, next.is_some(), "{:?} from {:?}", op, state);
            match next {
                Some(s) => {
                    state = s;
                    prop_assert_eq!(ctx.log.len(), before.log.len() + 1);
                }
                None => prop_assert_eq!(&ctx, &before),
            }
            prop_assert_eq!(ctx.state, state);
        }
        prop_assert!(ctx.log.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    }
}

#[test]
fn golden_session_digest_and_guidance_are_deterministic() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let ws = common::golden_flow(dir.path(), std::sync::Arc::new(common::author()));
        let digest = ws.digest("p1.s1").unwrap();
        let view = ws.session("p1.s1").unwrap();
        (canonical::to_string(&digest), digest, view)
    };
    let (a_bytes, digest, view) = run();
    let (b_bytes, _, view_b) = run();
    assert_eq!(a_bytes, b_bytes);
    assert_eq!(view.guidance, view_b.guidance);
    assert!(view.guidance.is_some());

    assert!(digest.completed);
    assert_eq!(digest.score_display.as_deref(), Some("75.0%"));
    assert_eq!(digest.weak_concepts, vec!["food-surplus-and-farming".to_string()]);
    assert_eq!(digest.questions.len(), 3);
    let lessons: Vec<&str> = digest.lessons.iter().map(|l| l.lesson_id.as_str()).collect();
    assert_eq!(lessons, ["era2-l1", "era2-l2"]);

    let practice = view.answers[1].expansion(Tier::PracticeQuestions).unwrap();
    assert!(practice.items.iter().all(|i| i.options.len() == 4 && i.answer_index < 4));
    assert_eq!(view.answers[2].scope_flag, ScopeFlag::OutOfScope);
    assert!(view.answers[2].citations.is_empty());
    let tallies: BTreeMap<_, _> = view.result.unwrap().per_concept.into_iter().map(|(k, t)| (k, (t.asked, t.correct))).collect();
    assert_eq!(tallies.values().map(|t| t.0).sum::<u32>(), 4);
}
