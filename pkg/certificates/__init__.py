from certificates.bank import CertificateBank, LevelCertificate, ParameterSet
from certificates.embeddings import PolytopicEmbedding
