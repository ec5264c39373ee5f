#!/usr/bin/env python3
"""Regenerate the committed test fixtures in tests/fixtures/.

Outputs:
  webster_144.txt / webster_36.txt   dictionary text, Webster layout
  defs_144.conllu / defs_36.conllu   one parse block per definition
  test_30.txt / test_12.txt          word<TAB>paraphrase test sets
  test_30.conllu / test_12.conllu    parses for the test definitions
  polarity_pos.txt / polarity_neg.txt  1000 sentences each

Parses come from a small rule-based parser (root = first verb, other
tokens attach to the next noun/verb); the engine only requires valid
trees, not linguistically perfect ones.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))
from revdict.data import tokenize  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# (headword, gloss). The first 36 entries form the smoke subset.
ENTRIES = [
    ("cat", "a small furry animal that purrs and hunts mice"),
    ("dog", "a loyal animal kept as a pet that barks"),
    ("water", "a clear liquid that people drink and fish swim in"),
    ("fire", "hot burning flames that give light and heat"),
    ("sun", "the bright star that shines in the sky during the day"),
    ("moon", "the round object that glows in the night sky"),
    ("tree", "a tall plant with a trunk branches and leaves"),
    ("house", "a building where a family lives"),
    ("book", "pages of printed words bound together for reading"),
    ("bread", "a baked food made from flour and yeast"),
    ("river", "a large stream of water flowing to the sea"),
    ("mountain", "a very high hill of rock rising above the land"),
    ("bird", "a feathered animal with wings that can fly"),
    ("fish", "an animal that lives in water and swims with fins"),
    ("chair", "a seat with a back and four legs for one person"),
    ("table", "a flat surface on legs used for meals and work"),
    ("rain", "drops of water falling from clouds in the sky"),
    ("snow", "soft white frozen flakes falling in cold weather"),
    ("wind", "moving air that blows across the land"),
    ("king", "a man who rules a country and wears a crown"),
    ("queen", "a woman who rules a country or the wife of a king"),
    ("doctor", "a person trained to heal sick people"),
    ("teacher", "a person who instructs students in a school"),
    ("run", "to move fast on foot with quick steps"),
    ("sleep", "to rest with closed eyes and an inactive mind"),
    ("eat", "to put food in the mouth chew and swallow it"),
    ("sing", "to make music with the voice"),
    ("happy", "feeling pleasure and joy"),
    ("sad", "feeling sorrow and unhappiness"),
    ("cold", "having a low temperature lacking heat"),
    ("hot", "having a high temperature full of heat"),
    ("big", "of great size large in measure"),
    ("small", "of little size not large"),
    ("fast", "moving with great speed quick"),
    ("slow", "moving without speed taking a long time"),
    ("island", "a piece of land surrounded by water on all sides"),
    # end of smoke subset
    ("horse", "a large strong animal that people ride"),
    ("cow", "a farm animal that gives milk"),
    ("sheep", "a farm animal covered with wool"),
    ("pig", "a fat farm animal with a flat snout"),
    ("mouse", "a tiny animal with a long tail that cats chase"),
    ("lion", "a large wild cat that roars and hunts in a pride"),
    ("bear", "a big heavy wild animal with thick fur"),
    ("wolf", "a wild animal like a dog that howls and hunts in packs"),
    ("fox", "a cunning wild animal with a bushy tail"),
    ("bee", "a striped insect that makes honey and can sting"),
    ("ant", "a tiny insect that lives in large colonies"),
    ("spider", "a small creature with eight legs that spins webs"),
    ("snake", "a long animal without legs that slides on the ground"),
    ("frog", "a small green animal that jumps and lives near ponds"),
    ("whale", "a huge animal that lives in the ocean and breathes air"),
    ("eagle", "a large bird of prey with sharp eyes and strong wings"),
    ("ocean", "the vast body of salt water covering most of the earth"),
    ("lake", "a large body of still water surrounded by land"),
    ("forest", "a large area covered with many trees"),
    ("desert", "a dry sandy land with very little rain"),
    ("valley", "low land lying between hills or mountains"),
    ("cave", "a natural hollow space inside a hill or under the ground"),
    ("cloud", "a white or gray mass of water drops floating in the sky"),
    ("storm", "violent weather with strong wind rain and thunder"),
    ("ice", "water frozen solid by cold"),
    ("stone", "a hard piece of rock"),
    ("sand", "tiny loose grains of worn rock found on beaches"),
    ("gold", "a precious yellow metal used for coins and rings"),
    ("iron", "a strong common metal used to make tools"),
    ("glass", "a hard clear material used for windows and bottles"),
    ("wood", "the hard material of a tree trunk used for building"),
    ("paper", "thin sheets made from wood pulp used for writing"),
    ("milk", "a white liquid that cows give and babies drink"),
    ("cheese", "a solid food made from pressed milk"),
    ("apple", "a round sweet fruit with red or green skin"),
    ("orange", "a round juicy fruit with a thick bright skin"),
    ("rice", "small white grains cooked and eaten as food"),
    ("salt", "white grains used to season and preserve food"),
    ("honey", "a sweet sticky food that bees make"),
    ("knife", "a tool with a sharp blade for cutting"),
    ("spoon", "a tool with a small shallow bowl for eating soup"),
    ("hammer", "a tool with a heavy head for driving nails"),
    ("rope", "thick strong cord made of twisted fibers"),
    ("wheel", "a round frame that turns and moves a vehicle"),
    ("boat", "a small vessel that floats and carries people on water"),
    ("ship", "a large vessel that sails across the ocean"),
    ("train", "a line of cars pulled along rails by an engine"),
    ("bridge", "a structure carrying a road over a river"),
    ("road", "a wide way on which cars and people travel"),
    ("door", "a movable panel that opens and closes an entrance"),
    ("window", "an opening in a wall filled with glass to let in light"),
    ("wall", "an upright structure that divides or encloses a space"),
    ("garden", "a piece of ground where flowers and vegetables grow"),
    ("farm", "land and buildings where crops and animals are raised"),
    ("school", "a place where children go to learn"),
    ("church", "a building where people gather to pray"),
    ("market", "a place where people buy and sell goods"),
    ("prison", "a building where criminals are locked up"),
    ("soldier", "a person who serves in an army and fights in war"),
    ("farmer", "a person who grows crops and raises animals"),
    ("baker", "a person who makes bread and cakes"),
    ("friend", "a person one knows well and likes"),
    ("enemy", "a person who hates and wishes to harm another"),
    ("child", "a young human being not yet grown"),
    ("mother", "a woman who has given birth to a child"),
    ("father", "a man who has a child"),
    ("winter", "the coldest season of the year with snow and ice"),
    ("summer", "the warmest season of the year with long sunny days"),
    ("morning", "the early part of the day when the sun rises"),
    ("night", "the dark hours when the sun is below the horizon"),
    ("year", "the time the earth takes to travel around the sun"),
    ("clock", "a machine that measures and shows the time"),
    ("money", "coins and paper notes used to buy things"),
    ("song", "a short piece of music with words that people sing"),
    ("dance", "to move the body in steps with music"),
    ("story", "a telling of events real or imagined"),
    ("dream", "the pictures and thoughts that come during sleep"),
    ("voice", "the sound made by a person when speaking or singing"),
    ("color", "the quality of light that the eye sees as red blue or green"),
    ("heart", "the organ in the chest that pumps blood through the body"),
    ("hand", "the part of the arm with fingers used for holding"),
    ("eye", "the organ of the body with which one sees"),
    ("hair", "the fine threads that grow on the head"),
    ("walk", "to move on foot at an easy steady pace"),
    ("jump", "to push off the ground and rise into the air"),
    ("swim", "to move through water by moving the body"),
    ("fly", "to move through the air on wings"),
    ("throw", "to send a thing through the air with the arm"),
    ("climb", "to go up a steep surface using hands and feet"),
    ("laugh", "to make sounds of joy and amusement"),
    ("cry", "to shed tears from sorrow or pain"),
    ("speak", "to say words aloud with the voice"),
    ("listen", "to pay attention to sound with the ear"),
    ("open", "not shut allowing passage through"),
    ("dark", "without light hard to see in"),
    ("bright", "giving out much light shining strongly"),
    ("heavy", "having great weight hard to lift"),
    ("light", "having little weight easy to lift"),
    ("old", "having lived or existed for many years"),
    ("young", "having lived only a short time not old"),
    ("rich", "having much money and many possessions"),
    ("poor", "having little money lacking possessions"),
    ("empty", "containing nothing with nothing inside"),
    ("full", "holding as much as possible with no room left"),
    ("clean", "free from dirt and stains"),
    ("sharp", "having a fine edge or point able to cut"),
    ("sweet", "tasting like sugar or honey pleasant to the tongue"),
    ("strong", "having great power of body able to lift much"),
]

# (headword, paraphrase). The first 12 target words in the smoke subset.
TEST_DEFS = [
    ("cat", "a little pet animal that chases mice and purrs"),
    ("dog", "a pet animal that barks and is loyal to people"),
    ("water", "the clear liquid that people drink"),
    ("fire", "burning flames giving heat and light"),
    ("sun", "the star that gives light to the earth during the day"),
    ("moon", "the glowing round body seen in the sky at night"),
    ("tree", "a tall plant having branches and leaves"),
    ("house", "a building in which people live"),
    ("book", "printed pages bound together that people read"),
    ("river", "a wide stream of flowing water"),
    ("bird", "an animal with feathers and wings that flies"),
    ("mountain", "a great mass of rock rising high above the land"),
    # end of smoke test subset
    ("horse", "a strong animal that a person can ride"),
    ("cow", "an animal on a farm that people milk"),
    ("lion", "a great wild cat that hunts and roars"),
    ("bee", "an insect that stings and makes honey"),
    ("snake", "a legless animal that slides along the ground"),
    ("ocean", "the huge body of salt water on the earth"),
    ("forest", "a wide area of land covered by trees"),
    ("desert", "dry land of sand where little rain falls"),
    ("gold", "a yellow precious metal made into rings and coins"),
    ("milk", "the white liquid drink that a cow gives"),
    ("apple", "a sweet round fruit with green or red skin"),
    ("knife", "a sharp blade used to cut things"),
    ("ship", "a great vessel sailing on the ocean"),
    ("school", "the place where students go to learn"),
    ("winter", "the cold season of ice and snow"),
    ("money", "the coins and notes people use to buy goods"),
    ("heart", "the organ that pumps blood in the chest"),
    ("eye", "the part of the body used to see"),
]

SMOKE_WORDS = 36
SMOKE_TESTS = 12

# ----------------------------------------------------------------------
# tiny rule-based tagger/parser, good enough to produce valid trees

DET = {"a", "an", "the", "this", "that", "one", "all", "many", "much", "some",
       "no", "most", "every", "four", "eight", "its"}
ADP = {"of", "in", "on", "with", "for", "from", "to", "by", "at", "near",
       "during", "over", "under", "across", "through", "into", "above",
       "around", "along", "as", "without", "between", "inside"}
PRON = {"it", "they", "people", "one", "others", "another", "which", "who",
        "what"}
CONJ = {"and", "or", "but"}
VERBS = {"is", "are", "has", "have", "purrs", "hunts", "barks", "drink",
         "swim", "give", "gives", "shines", "glows", "lives", "live", "made",
         "flowing", "rising", "can", "fly", "flies", "used", "bound", "kept",
         "falling", "blows", "rules", "wears", "trained", "heal", "instructs",
         "move", "rest", "put", "chew", "swallow", "make", "makes", "feeling",
         "having", "moving", "taking", "surrounded", "ride", "covered",
         "chase", "roars", "howls", "sting", "spins", "slides", "jumps",
         "breathes", "covering", "lying", "floating", "frozen", "worn",
         "found", "growing", "cooked", "eaten", "season", "preserve",
         "boiling", "cutting", "eating", "driving", "sewing", "twisted",
         "turns", "moves", "floats", "carries", "pulled", "sails", "carrying",
         "travel", "opens", "closes", "filled", "let", "keeps", "divides",
         "encloses", "grow", "raised", "go", "learn", "gather", "pray",
         "buy", "sell", "locked", "serves", "fights", "works", "grows",
         "raises", "steals", "knows", "likes", "hates", "wishes", "harm",
         "grown", "given", "takes", "measures", "shows", "sing", "sent",
         "telling", "come", "sees", "cast", "blocking", "pumps", "holding",
         "chewing", "push", "rise", "send", "using", "shed", "say", "pay",
         "allowing", "see", "giving", "shining", "lift", "lived", "existed",
         "lacking", "containing", "tasting", "cut", "able", "hard",
         "speaking", "singing", "rises", "hunt", "imagined", "pressed"}
ADV = {"very", "not", "yet", "well", "only", "far", "away", "fast", "together",
       "up", "aloud", "also"}


def tag(tok: str) -> str:
    if tok in DET:
        return "DET"
    if tok in ADP:
        return "ADP"
    if tok in CONJ:
        return "CCONJ"
    if tok in PRON:
        return "PRON"
    if tok in VERBS:
        return "VERB"
    if tok in ADV or tok.endswith("ly"):
        return "ADV"
    return "NOUN"


def parse(tokens):
    """Heads point forward (to the next NOUN/VERB) or to the root, so the
    result is always a single-rooted acyclic tree."""
    tags = [tag(t) for t in tokens]
    root = next((i for i, t in enumerate(tags) if t == "VERB"), None)
    if root is None:
        root = next((i for i, t in enumerate(tags) if t == "NOUN"), 0)
    heads = []
    for i in range(len(tokens)):
        if i == root:
            heads.append(0)
            continue
        head = next((j for j in range(i + 1, len(tokens))
                     if tags[j] in ("NOUN", "VERB") and j != i), None)
        heads.append(head + 1 if head is not None else root + 1)
    return tags, heads


def conllu_block(tokens):
    tags, heads = parse(tokens)
    lines = []
    for i, (tok, t, h) in enumerate(zip(tokens, tags, heads), start=1):
        lines.append("\t".join([str(i), tok, tok, t, "_", "_", str(h), "dep",
                                "_", "_"]))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# polarity sentence templates

POS_ADJ = ["wonderful", "brilliant", "delightful", "moving", "charming",
           "superb", "hilarious", "gripping", "beautiful", "clever",
           "touching", "fresh", "engaging", "masterful", "stunning"]
NEG_ADJ = ["terrible", "boring", "dreadful", "dull", "tedious", "awful",
           "clumsy", "shallow", "lifeless", "painful", "messy", "stale",
           "pointless", "bland", "forgettable"]
POS_VERB = ["delighted", "charmed", "impressed", "thrilled", "moved",
            "captivated", "entertained"]
NEG_VERB = ["bored", "annoyed", "disappointed", "irritated", "exhausted",
            "confused", "depressed"]
NOUNS = ["film", "movie", "story", "script", "acting", "direction", "plot",
         "cast", "ending", "dialogue", "picture", "performance"]
INTENS = ["truly", "simply", "quite", "really", "utterly", "thoroughly", ""]

TEMPLATES = [
    "the {noun} was {intens} {adj}",
    "a {intens} {adj} {noun} from start to finish",
    "this {noun} {verb} me {intens}",
    "an {adj} {noun} with an {adj2} {noun2}",
    "the {noun} felt {intens} {adj} and the {noun2} was {adj2}",
    "one of the most {adj} {noun}s of the year",
    "{intens} {adj} work by the whole {noun}",
    "the {noun2} {verb} everyone and the {noun} was {adj}",
]


def polarity_sentences(rng, adjs, verbs, count):
    out = []
    while len(out) < count:
        t = TEMPLATES[rng.integers(len(TEMPLATES))]
        s = t.format(noun=NOUNS[rng.integers(len(NOUNS))],
                     noun2=NOUNS[rng.integers(len(NOUNS))],
                     adj=adjs[rng.integers(len(adjs))],
                     adj2=adjs[rng.integers(len(adjs))],
                     verb=verbs[rng.integers(len(verbs))],
                     intens=INTENS[rng.integers(len(INTENS))])
        out.append(" ".join(s.split()))
    return out


# ----------------------------------------------------------------------


def write_webster(entries, path):
    with open(path, "w") as f:
        for word, gloss in entries:
            f.write(word.upper() + "\n\n")
            f.write("Defn: " + gloss.capitalize() + ".\n\n")


def write_conllu(glosses, path):
    with open(path, "w") as f:
        for gloss in glosses:
            f.write(conllu_block(tokenize(gloss)))
            f.write("\n")


def write_tests(defs, txt_path, conllu_path):
    with open(txt_path, "w") as f:
        for word, text in defs:
            f.write(f"{word}\t{text}\n")
    write_conllu([text for _, text in defs], conllu_path)


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    assert len(ENTRIES) == 144, len(ENTRIES)
    assert len(TEST_DEFS) == 30, len(TEST_DEFS)
    words_144 = {w for w, _ in ENTRIES}
    words_36 = {w for w, _ in ENTRIES[:SMOKE_WORDS]}
    assert all(w in words_144 for w, _ in TEST_DEFS)
    assert all(w in words_36 for w, _ in TEST_DEFS[:SMOKE_TESTS])

    write_webster(ENTRIES, FIXTURES / "webster_144.txt")
    write_webster(ENTRIES[:SMOKE_WORDS], FIXTURES / "webster_36.txt")
    write_conllu([g for _, g in ENTRIES], FIXTURES / "defs_144.conllu")
    write_conllu([g for _, g in ENTRIES[:SMOKE_WORDS]], FIXTURES / "defs_36.conllu")
    write_tests(TEST_DEFS, FIXTURES / "test_30.txt", FIXTURES / "test_30.conllu")
    write_tests(TEST_DEFS[:SMOKE_TESTS], FIXTURES / "test_12.txt",
                FIXTURES / "test_12.conllu")

    rng = np.random.default_rng(20240817)
    pos = polarity_sentences(rng, POS_ADJ, POS_VERB, 1000)
    neg = polarity_sentences(rng, NEG_ADJ, NEG_VERB, 1000)
    # swap 7% of sentences between the files: the label noise gives the
    # classifier something to overfit, so train/test accuracy can diverge
    noisy = rng.choice(1000, size=70, replace=False)
    for i in noisy:
        pos[i], neg[i] = neg[i], pos[i]
    (FIXTURES / "polarity_pos.txt").write_text("\n".join(pos) + "\n")
    (FIXTURES / "polarity_neg.txt").write_text("\n".join(neg) + "\n")
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
