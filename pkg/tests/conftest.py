import pytest

from sememe_compose import parse_kb

# The four worked SCD examples: (mwe sememes, first/second constituent
# sememes, expected level). English halves of the bilingual identifiers.
TABLE1_ROWS = [
    ({"fact", "occupation", "politics", "uprise", "human", "agricultural"},
     {"occupation", "human", "agricultural"},
     {"uprise", "fact", "politics"}, 3),
    ({"math", "image"},
     {"math", "knowledge", "question", "funcword"},
     {"image"}, 2),
    ({"exam", "engage"},
     {"handle", "respond", "agree", "obey", "funcword", "surname"},
     {"exam", "check"}, 1),
    ({"finish"},
     {"draw", "part", "image", "character", "express"},
     {"symbol", "text"}, 0),
]

TABLE1_LEXICON = """\
peasant\toccupation,human,agricultural
uprising\tuprise,fact,politics
geometry\tmath,knowledge,question,funcword
figure\timage
deal_with\thandle,respond,agree,obey,funcword,surname
quiz\texam,check
draw\tdraw,part,image,character,express
period\tsymbol,text
"""

TABLE1_MWES = """\
peasant_uprising\tpeasant\tuprising\tN_N\tfact,occupation,politics,uprise,human,agricultural
geometric_figure\tgeometry\tfigure\tADJ_N\tmath,image
engage_test\tdeal_with\tquiz\tV_N\texam,engage
end\tdraw\tperiod\tOTHER\tfinish
"""

TABLE1_EXPECTED_SCD = {
    "peasant_uprising": 3,
    "geometric_figure": 2,
    "engage_test": 1,
    "end": 0,
}


@pytest.fixture
def table1_ds():
    return parse_kb(TABLE1_LEXICON, TABLE1_MWES)
