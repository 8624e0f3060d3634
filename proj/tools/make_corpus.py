#!/usr/bin/env python3
"""Regenerates the archive-wrapped fixtures and manifest under tests/corpus.

Base documents, goldens and pathological pages are hand-written; this script
only derives the wrapped variants from the bases and cross-checks every
golden against Python's own HTML parser. Run it after editing a base file
and commit the result.
"""

import html.parser
import json
import pathlib
import re
import sys

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "tests" / "corpus"

BASES = {
    "article": "http://www.example.gov/news/2005/05-38.html",
    "recipe": "http://www.example.com/recipes/creme-brulee.html",
    "faq": "http://www.example.org/reading-room/faq.html",
    "report": "http://www.example.pl/reports/2012.html",
    "letter": "http://www.rsinc.com/",
}

WAYBACK_HEAD = """<script type="text/javascript" src="/static/js/analytics.js" ></script>
<script type="text/javascript">archive_analytics.values.server_name="wwwb-app14.us.archive.org";archive_analytics.values.server_ms=183;</script>
<link type="text/css" rel="stylesheet" href="/static/css/banner-styles.css"/>
"""

WAYBACK_BANNER = """<!-- BEGIN WAYBACK TOOLBAR INSERT -->
<div id="wm-ipp" lang="en" style="display:none;">

<div style="position:fixed;left:0;top:0;width:100%!important">
<div id="wm-ipp-inside">
   <table style="width:100%;"><tbody><tr>
   <td id="wm-logo">
       <a href="/web/" title="Wayback Machine home page"><img src="/static/images/toolbar/wayback-toolbar-logo.png" alt="Wayback Machine" width="110" height="39" border="0" /></a>
   </td>
   <td class="c">
       <table style="margin:0 auto;"><tbody><tr>
       <td class="u" colspan="2">
       <form target="_top" method="get" action="/web/form-submit.jsp" name="wmtb" id="wmtb"><input type="text" name="url" id="wmtbURL" value="{uri}" style="width:400px;" onfocus="this.focus();this.select();" /><input type="hidden" name="type" value="replay" /><input type="hidden" name="date" value="{timestamp}" /><input type="submit" value="Go" /><span id="wm_tb_options" style="display:block;"></span></form>
       </td>
       <td class="n" rowspan="2">
           <table><tbody>
           <!-- NEXT/PREV MONTH NAV AND MONTH INDICATOR -->
           <tr class="m">
            <td class="b" nowrap="nowrap">OCT</td>
            <td class="c" id="displayMonthEl" title="You are here: {timestamp}">NOV</td>
            <td class="f" nowrap="nowrap">DEC</td>
           </tr>
           </tbody></table>
       </td>
       </tr>
       <tr>
       <td class="s"><a class="t" href="/web/*/{uri}" title="See a list of every capture for this URL">41 captures</a></td>
       </tr></tbody></table>
   </td>
   </tr></tbody></table>
</div>
</div>
</div>
<!-- END WAYBACK TOOLBAR INSERT -->
"""

WAYBACK_TAIL = """<!--
     FILE ARCHIVED ON 13:28:02 Nov 26, 2008 AND RETRIEVED FROM THE
     INTERNET ARCHIVE ON 16:02:11 Jan 10, 2016.
     JAVASCRIPT APPENDED BY WAYBACK MACHINE, COPYRIGHT INTERNET ARCHIVE.
-->
"""

UK_BANNER = """ <div id="webArchiveInfobox" style="display: block; min-width: 1300px; height: 105px; position: absolute; top: 0px; left: 0px; background-color: #333;">
    <script type="text/javascript">
      BANNER_TNA_VERSION="13/5/2014";
      function enforceBanner() {
        thebody = document.getElementsByTagName("body")[0];
        if (thebody != null && thebody.style != null) {
          //inject style to override body with id
          thebody.style.backgroundPosition = "0px 73px";
          thebody.style.position = "relative";
          thebody.style.marginTop = "105px";
          if (thebody.style.width.lastIndexOf("px") == -1)
            thebody.style.width = "100%";
        }
      }
      enforceBanner();
    </script>

    <div id="webArchiveLogo" style="display: block; width: 317px; height: 70px; float: left; margin: 15px 0px 5px 0px; background: url(/media/img/TNA_logo_white_201006.gif) no-repeat 2px 20px;">&nbsp;</div>

    <!-- the text content -->
    <div style="display: block; margin-top: 18px; height: auto; width: 915px; margin-left: 325px; margin-right:0px; color: white !important; font-family: Verdana, Arial, Helvetica, sans-serif; font-size: 12px; line-height: 14px; text-align: left; color: white;">
      This website is an archived copy held by The National Archives. It will not be updated.
      <a href="http://www.nationalarchives.gov.uk/webarchive/" style="color: white;">Find out more about the UK Government Web Archive</a>
    </div>
 </div>
"""

PRONI_BANNER = """<div id="PRONIBANNER" style="display: block; position: absolute; width: 100%; height: 120px; top: 0; left: 0;">
    <div id="PRONILOGO" style="display: block; width: 400px; height: 96px; float: right; margin: 0px; padding: 0; background-image: url('/media/img/pronilogo.jpg'); background-repeat: no-repeat; background-position: right bottom;"><span class="ACCESSIBLE" style="visibility: hidden;">Public Record Office of Northern Ireland</span>
    </div>
    <div id="PRONIBANNERCONTENT" style="display: block; height: 100%; margin: 0 420px 0 20px;">
        <div style="display: block; padding: 15px 0 2px 0; margin: 0; color: #18417f !important; font-family: Helvetica, Arial, sans-serif !important; font-size: 10pt !important; line-height: 1.40em !important; font-weight: bold !important; background-color: transparent !important">THIS IS NOT A LIVE WEBSITE
        </div>
        <div style="display: block; margin: 0; color: #18417f; font-size: 9pt;">This is an archived copy of a website. <a href="http://www.proni.gov.uk/">Visit PRONI</a></div>
    </div>
</div>
"""

ARCHIVE_IS_META = '<meta property="og:site_name" content="archive.is"/>\n'

ARCHIVE_IS_HEADER = """<div id="HEADER" style="font-family:Verdana,Arial,Helvetica;background-color:#FFFAE1;border-bottom:2px #B40010 solid;min-width:1028px"><div style="padding-top:10px"></div><table style="width:1028px;font-size:10px" border="0" cellspacing="0" cellpadding="0"><tr><td style="width:150px;text-align:center;vertical-align:top" rowspan="5"><span style="white-space:nowrap;color:black;margin:0px;cursor:pointer" onclick="window.location='http://archive.is/'"><div style="font-size:24px">archive.is</div><div style="font-size:12px">webpage capture</div></span></td><td style="text-align:right;padding:3px 3px 0 3px;white-space:nowrap;vertical-align:top;font-size:14px;font-weight:bold">Saved from</td><td style="text-align:right;padding:3px 3px 0 3px;white-space:nowrap;vertical-align:top"><form style="text-align:left;margin:0" action="https://archive.is/search/" method="get"><table cellspacing="0" cellpadding="0" border="0"><tr><td style="width:500px"><input style="border:1px solid black;height:20px;margin:0 0 0 0;padding:0;width:500px" type="text" name="q" value="{uri}"/><input type="hidden" name="t" value="1395183562435"/><div style="text-align:right;font-size:10px"><span style="white-space:nowrap;padding:0;margin:0;color:gray">no other snapshots from this url</span></div></td><td style="vertical-align:top"><input style="width:60px;height:20px;padding:0;margin:0 0 0 3px" type="submit" tabindex="-1" value="search"/></td></tr></table></form></td><td style="text-align:right;padding:4px 5px 2px 5px;font-size:14px;white-space:nowrap;vertical-align:top" rowspan="2">18 Mar 2014 22:59:22 UTC</td></tr><tr><td style="text-align:right;padding:3px 3px 0 3px;white-space:nowrap;vertical-align:top;font-size:14px;font-weight:bold">Redirected from</td><td style="text-align:left;padding:3px 3px 0 3px">no other snapshots from this url</td></tr></table></div>
"""

ARCHIVE_IS_HASHTAGS = """<table id="hashtags" style="text-align:right;font-family:Verdana,Arial,Helvetica;font-size:10px" border="0" height="100%"><tr><td><a href="#selection-41.0-41.8">#selection-41.0-41.8</a></td></tr><tr><td><a href="#selection-87.0-87.12">#selection-87.0-87.12</a></td></tr></table>
"""

WRAPPERS = {
    "wayback": ("http://web.archive.org/web/20081126132802/{uri}", "text/html; charset=UTF-8"),
    "uk": ("http://webarchive.nationalarchives.gov.uk/20120405114247/{uri}", "text/html"),
    "proni": ("http://webarchive.proni.gov.uk/20111214024729/{uri}", "text/html; charset=utf-8"),
    "archive-is": ("http://archive.is/19961226114737/{uri}", "text/html;charset=utf-8"),
}

BODY_OPEN = re.compile(r"<body[^>]*>", re.I)
HEAD_OPEN = re.compile(r"<head[^>]*>", re.I)
TITLE_OPEN = re.compile(r"<title[^>]*>", re.I)
BODY_CLOSE = re.compile(r"</body\s*>", re.I)
HTML_CLOSE = re.compile(r"</html\s*>", re.I)


def insert_after(pattern, document, snippet):
    match = pattern.search(document)
    if not match:
        raise SystemExit(f"pattern {pattern.pattern} not found")
    return document[: match.end()] + "\n" + snippet + document[match.end():]


def insert_before(pattern, document, snippet):
    match = pattern.search(document)
    if not match:
        raise SystemExit(f"pattern {pattern.pattern} not found")
    return document[: match.start()] + snippet + document[match.start():]


def wrap(wrapper, document, uri):
    if wrapper == "wayback":
        doc = insert_after(HEAD_OPEN, document, WAYBACK_HEAD)
        doc = insert_after(BODY_OPEN, doc, WAYBACK_BANNER.format(uri=uri, timestamp="20081126132802"))
        return doc + WAYBACK_TAIL
    if wrapper == "uk":
        doc = TITLE_OPEN.sub(lambda m: m.group(0) + "[ARCHIVED CONTENT] ", document, count=1)
        return insert_after(BODY_OPEN, doc, UK_BANNER)
    if wrapper == "proni":
        doc = TITLE_OPEN.sub(lambda m: m.group(0) + "[ARCHIVED CONTENT] ", document, count=1)
        return insert_after(BODY_OPEN, doc, PRONI_BANNER)
    if wrapper == "archive-is":
        doc = insert_after(HEAD_OPEN, document, ARCHIVE_IS_META)
        doc = insert_after(BODY_OPEN, doc, ARCHIVE_IS_HEADER.format(uri=uri))
        doc = insert_before(BODY_CLOSE, doc, ARCHIVE_IS_HASHTAGS)
        return minify(doc)
    raise SystemExit(f"unknown wrapper {wrapper}")


def minify(document):
    """Puts the whole document on one line, collapsing whitespace runs."""
    return re.sub(r"[ \t\r\n\f]+", " ", document).strip()


class TextOracle(html.parser.HTMLParser):
    """Text of a document minus script/style, split on whitespace.

    Whitespace-only text outside <body> is dropped, as libxml2 does, so a
    title runs straight into the first body text when no body whitespace
    separates them.
    """

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.skip = 0
        self.in_body = False
        self.parts = []

    def handle_starttag(self, tag, attrs):
        if tag in ("script", "style"):
            self.skip += 1
        if tag == "body":
            self.in_body = True

    def handle_endtag(self, tag):
        if tag in ("script", "style") and self.skip:
            self.skip -= 1
        if tag == "body":
            self.in_body = False

    def handle_data(self, data):
        if self.skip:
            return
        if not self.in_body and not data.strip():
            return
        self.parts.append(data)

    def tokens(self):
        return "\n".join("".join(self.parts).split())


def oracle_text(document):
    parser = TextOracle()
    parser.feed(document)
    parser.close()
    return parser.tokens()


def main():
    fixtures = []
    failures = 0
    for base, uri in BASES.items():
        source = (CORPUS / "base" / f"{base}.html").read_text(encoding="utf-8")
        golden = (CORPUS / "expected" / f"{base}.txt").read_text(encoding="utf-8")
        if oracle_text(source) != golden:
            print(f"golden mismatch for {base}", file=sys.stderr)
            failures += 1
        fixtures.append({"file": f"base/{base}.html", "base": base, "wrapper": "plain", "uri": uri,
                         "content_type": "text/html; charset=utf-8", "expected": f"expected/{base}.txt"})
        for wrapper, (uri_template, content_type) in WRAPPERS.items():
            wrapped_uri = uri_template.format(uri=uri)
            document = wrap(wrapper, source, uri)
            path = CORPUS / wrapper / f"{base}.html"
            path.write_text(document, encoding="utf-8")
            fixtures.append({"file": f"{wrapper}/{base}.html", "base": base, "wrapper": wrapper,
                             "uri": wrapped_uri, "content_type": content_type,
                             "expected": f"expected/{base}.txt"})

    pathological = [
        ("pathological/null-bytes.html", "http://www.example.com/null-bytes.html", "text/html",
         "expected/null-bytes.txt", {"null_bytes": 10}),
        ("pathological/noscript-swallow.html", "http://www.example.com/noscript.html", "text/html", None, {}),
        ("pathological/noscript-faux.html", "http://archive.is/20130101000000/http://www.example.com/noscript.html",
         "text/html", "expected/noscript-faux.txt", {"faux_tags": 2}),
        ("pathological/wrong-charset.html", "http://www.example.com/lodz.html",
         "text/html; charset=windows-1252", "expected/wrong-charset.txt", {}),
        ("pathological/undecodable.html", "http://www.example.com/cafe.html",
         "text/html; charset=us-ascii", "expected/undecodable.txt", {}),
        ("pathological/meta-refresh.html", "http://www.example.com/old-location/", "text/html", None, {}),
        ("pathological/meta-refresh-self.html", "http://www.example.com/scores.html", "text/html",
         "expected/meta-refresh-self.txt", {}),
        ("pathological/js-redirect-1.html", "http://web.archive.org/web/20050303000000/http://www.example.gov/pr/05-38",
         "text/html", None, {}),
        ("pathological/js-redirect-2.html",
         "http://web.archive.org/web/20050303000000/http://www.example.gov/news/05-38", "text/html", None, {}),
        ("webcite/frameset.html", "http://www.webcitation.org/6BToD7SUd", "text/html; charset=utf-8", None, {}),
        ("webcite/topframe.html", "http://www.webcitation.org/topframe.php", "text/html", None, {}),
        ("webcite/mainframe-no-session.html", "http://www.webcitation.org/mainframe.php", "text/html", None, {}),
    ]
    for file, uri, content_type, expected, extra in pathological:
        entry = {"file": file, "base": None, "wrapper": "pathological", "uri": uri, "content_type": content_type,
                 "expected": expected}
        entry.update(extra)
        fixtures.append(entry)

    for entry in fixtures:
        if entry["expected"] and entry["wrapper"] == "pathological" and "undecodable" not in entry["file"]:
            raw = (CORPUS / entry["file"]).read_bytes().replace(b"\0", b"")
            text = oracle_text(raw.decode("utf-8"))
            golden = (CORPUS / entry["expected"]).read_text(encoding="utf-8")
            if text != golden:
                print(f"golden mismatch for {entry['file']}", file=sys.stderr)
                failures += 1

    (CORPUS / "manifest.json").write_text(json.dumps({"fixtures": fixtures}, indent=2) + "\n", encoding="utf-8")
    print(f"{len(fixtures)} fixtures, {failures} golden mismatches")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
